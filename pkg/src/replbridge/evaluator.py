"""A small deterministic Lisp-like evaluator with shared global state.

This is the session embedded behind the server.  The language subset:

* special forms: ``quote``, ``if``, ``progn``, ``setq``, ``lambda``, ``defun``
* builtins: ``+ - * car cdr cons list equal < cw error``
* ``NIL`` is false, everything else is true; ``T`` is canonical truth.

Semantics worth knowing:

* ``lambda`` evaluates to its own source form, so functions stay inside
  the printable S-expression universe.  Parameters are dynamically
  scoped: a call extends the environment of the call site.
* ``setq`` updates the innermost binding of the name, or the session
  globals when the name has no local binding.
* ``cw`` formats its string argument (``~a`` substitutes the printed
  form of the next argument, ``~%`` is a newline) and emits the result
  as exactly one printed chunk per call.
* Global mutations are buffered per command and committed only when the
  command succeeds, so failed commands never change the session.
* Function application depth is capped at 10,000; a runaway recursion
  becomes an error outcome instead of taking down the session.

``evaluate_command`` never raises: every failure, including evaluator
bugs, becomes an "errored" outcome and the session stays usable.  The
evaluation engine runs on an explicit work stack, so deeply nested
client input cannot overflow the interpreter stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .sexpr import NIL, T, Pair, SExpr, Symbol, as_list, is_nil, make_list, print_sexpr, sexpr_equal

__all__ = [
    "Session",
    "CommandOutcome",
    "RETURNED",
    "ERRORED",
    "MAX_CALL_DEPTH",
    "evaluate_command",
]

RETURNED = "returned"
ERRORED = "errored"

MAX_CALL_DEPTH = 10_000

_SPECIAL_FORMS = frozenset({"quote", "if", "progn", "setq", "lambda", "defun"})
_BUILTINS = frozenset({"+", "-", "*", "car", "cdr", "cons", "list", "equal", "<", "cw", "error"})
_CONSTANTS = frozenset({"NIL", "T"})
_RESERVED = _SPECIAL_FORMS | _BUILTINS | _CONSTANTS


@dataclass
class Session:
    """Shared evaluator state; one per server process."""

    globals: "dict[str, SExpr]" = field(default_factory=dict)
    next_gensym: int = 0


@dataclass(frozen=True)
class CommandOutcome:
    """Result of one command: a value or an error, plus captured output."""

    status: str
    value: Optional[SExpr]
    error_message: Optional[str]
    printed_chunks: "tuple[str, ...]"

    @classmethod
    def returned(cls, value: SExpr, chunks) -> "CommandOutcome":
        return cls(RETURNED, value, None, tuple(chunks))

    @classmethod
    def errored(cls, message: str, chunks) -> "CommandOutcome":
        return cls(ERRORED, None, message, tuple(chunks))

    @property
    def ok(self) -> bool:
        return self.status == RETURNED


class _EvalError(Exception):
    pass


def _snip(value: SExpr) -> str:
    text = print_sexpr(value)
    if len(text) > 80:
        text = text[:80] + "..."
    return text


def _want_int(op: str, value: SExpr) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _EvalError(f"{op}: not an integer: {_snip(value)}")
    return value


def _format_directives(fmt: str, args: "list[SExpr]", who: str) -> str:
    out: list[str] = []
    i = 0
    argi = 0
    while i < len(fmt):
        ch = fmt[i]
        if ch != "~":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(fmt):
            raise _EvalError(f"{who}: incomplete directive at end of format string")
        directive = fmt[i + 1]
        if directive == "a":
            if argi >= len(args):
                raise _EvalError(f"{who}: missing argument for ~a")
            out.append(print_sexpr(args[argi]))
            argi += 1
        elif directive == "%":
            out.append("\n")
        else:
            raise _EvalError(f"{who}: unknown directive ~{directive}")
        i += 2
    return "".join(out)


# Environments are chains of (frame-dict, parent); None is the empty chain.
_Env = Optional[tuple]


class _Evaluator:
    def __init__(self, globals_dict: "dict[str, SExpr]", emit: Callable[[str], None]):
        self.globals = globals_dict
        self.emit = emit

    def eval_top(self, expr: SExpr) -> SExpr:
        vals: list[SExpr] = []
        work: list[tuple] = [("eval", expr, None, 0)]
        while work:
            task = work.pop()
            tag = task[0]
            if tag == "eval":
                self._eval_step(task[1], task[2], task[3], work, vals)
            elif tag == "if":
                _, then_e, else_e, env, depth = task
                chosen = else_e if is_nil(vals.pop()) else then_e
                work.append(("eval", chosen, env, depth))
            elif tag == "seq":
                _, forms, idx, env, depth = task
                if idx + 1 < len(forms):
                    vals.pop()
                    work.append(("seq", forms, idx + 1, env, depth))
                    work.append(("eval", forms[idx + 1], env, depth))
            elif tag == "setq_store":
                _, name, env = task
                self._assign(name, vals[-1], env)
            elif tag == "builtin":
                _, name, argc = task
                args = vals[-argc:] if argc else []
                if argc:
                    del vals[-argc:]
                vals.append(self._apply_builtin(name, args))
            elif tag == "call":
                _, arg_exprs, env, depth, display = task
                fn = vals.pop()
                if not _is_lambda_form(fn):
                    raise _EvalError(f"not a function: {display or _snip(fn)}")
                work.append(("apply", fn, len(arg_exprs), env, depth, display))
                for arg in reversed(arg_exprs):
                    work.append(("eval", arg, env, depth))
            else:  # apply
                _, lam, argc, env, depth, display = task
                args = vals[-argc:] if argc else []
                if argc:
                    del vals[-argc:]
                self._apply_lambda(lam, args, env, depth, display, work, vals)
        if len(vals) != 1:
            raise _EvalError("internal evaluation imbalance")
        return vals[0]

    def _eval_step(self, expr: SExpr, env: _Env, depth: int, work: list, vals: list) -> None:
        if isinstance(expr, (int, str)) and not isinstance(expr, bool):
            vals.append(expr)
            return
        if isinstance(expr, Symbol):
            vals.append(self._lookup(expr.name, env))
            return
        if not isinstance(expr, Pair):
            raise _EvalError(f"cannot evaluate: {expr!r}")

        head = expr.car
        args = as_list(expr.cdr)
        if args is None:
            raise _EvalError(f"malformed expression: {_snip(expr)}")

        if isinstance(head, Symbol):
            name = head.name
            if name == "quote":
                if len(args) != 1:
                    raise _EvalError("quote expects exactly 1 argument")
                vals.append(args[0])
                return
            if name == "if":
                if len(args) not in (2, 3):
                    raise _EvalError("if expects 2 or 3 arguments")
                else_e: SExpr = args[2] if len(args) == 3 else NIL
                work.append(("if", args[1], else_e, env, depth))
                work.append(("eval", args[0], env, depth))
                return
            if name == "progn":
                if not args:
                    vals.append(NIL)
                    return
                work.append(("seq", args, 0, env, depth))
                work.append(("eval", args[0], env, depth))
                return
            if name == "setq":
                if len(args) != 2:
                    raise _EvalError("setq expects exactly 2 arguments")
                target = args[0]
                if not isinstance(target, Symbol):
                    raise _EvalError(f"setq: not a symbol: {_snip(target)}")
                if target.name in _RESERVED:
                    raise _EvalError(f"setq: cannot assign to {target.name}")
                work.append(("setq_store", target.name, env))
                work.append(("eval", args[1], env, depth))
                return
            if name == "lambda":
                self._lambda_parts(expr)  # fail early on malformed parameter lists
                vals.append(expr)
                return
            if name == "defun":
                if len(args) < 2:
                    raise _EvalError("defun expects a name, a parameter list, and a body")
                fname = args[0]
                if not isinstance(fname, Symbol):
                    raise _EvalError(f"defun: not a symbol: {_snip(fname)}")
                if fname.name in _RESERVED:
                    raise _EvalError(f"defun: cannot redefine {fname.name}")
                lam = Pair(Symbol("lambda"), expr.cdr.cdr)  # type: ignore[union-attr]
                self._lambda_parts(lam)
                self.globals[fname.name] = lam
                vals.append(fname)
                return
            if name in _BUILTINS:
                work.append(("builtin", name, len(args)))
                for arg in reversed(args):
                    work.append(("eval", arg, env, depth))
                return
            work.append(("call", args, env, depth, name))
            work.append(("eval", head, env, depth))
            return
        if isinstance(head, Pair):
            work.append(("call", args, env, depth, None))
            work.append(("eval", head, env, depth))
            return
        raise _EvalError(f"not a function: {_snip(head)}")

    def _lookup(self, name: str, env: _Env) -> SExpr:
        if name == "NIL":
            return NIL
        if name == "T":
            return T
        frame = env
        while frame is not None:
            bindings, frame = frame
            if name in bindings:
                return bindings[name]
        if name in self.globals:
            return self.globals[name]
        raise _EvalError(f"unbound symbol: {name}")

    def _assign(self, name: str, value: SExpr, env: _Env) -> None:
        frame = env
        while frame is not None:
            bindings, frame = frame
            if name in bindings:
                bindings[name] = value
                return
        self.globals[name] = value

    def _lambda_parts(self, lam: Pair) -> "tuple[list[str], list[SExpr]]":
        rest = as_list(lam.cdr)
        if rest is None or not rest:
            raise _EvalError("lambda expects a parameter list")
        params = as_list(rest[0])
        if params is None:
            raise _EvalError("lambda parameters must be a proper list of symbols")
        names: list[str] = []
        for param in params:
            if not isinstance(param, Symbol):
                raise _EvalError(f"lambda parameter is not a symbol: {_snip(param)}")
            if param.name in _RESERVED:
                raise _EvalError(f"lambda parameter shadows {param.name}")
            if param.name in names:
                raise _EvalError(f"duplicate parameter: {param.name}")
            names.append(param.name)
        return names, rest[1:]

    def _apply_lambda(
        self,
        lam: Pair,
        args: "list[SExpr]",
        env: _Env,
        depth: int,
        display: "str | None",
        work: list,
        vals: list,
    ) -> None:
        new_depth = depth + 1
        if new_depth > MAX_CALL_DEPTH:
            raise _EvalError(f"recursion depth exceeded (limit {MAX_CALL_DEPTH})")
        names, body = self._lambda_parts(lam)
        if len(names) != len(args):
            who = display or "lambda"
            raise _EvalError(
                f"wrong number of arguments: {who} takes {len(names)}, got {len(args)}"
            )
        new_env = (dict(zip(names, args)), env)
        if not body:
            vals.append(NIL)
            return
        work.append(("seq", body, 0, new_env, new_depth))
        work.append(("eval", body[0], new_env, new_depth))

    def _apply_builtin(self, name: str, args: "list[SExpr]") -> SExpr:
        if name == "+":
            total = 0
            for arg in args:
                total += _want_int("+", arg)
            return total
        if name == "*":
            product = 1
            for arg in args:
                product *= _want_int("*", arg)
            return product
        if name == "-":
            if not args:
                raise _EvalError("- expects at least 1 argument")
            first = _want_int("-", args[0])
            if len(args) == 1:
                return -first
            for arg in args[1:]:
                first -= _want_int("-", arg)
            return first
        if name == "<":
            _want_argc("<", args, 2)
            return T if _want_int("<", args[0]) < _want_int("<", args[1]) else NIL
        if name in ("car", "cdr"):
            _want_argc(name, args, 1)
            value = args[0]
            if is_nil(value):
                return NIL
            if not isinstance(value, Pair):
                raise _EvalError(f"{name}: not a pair: {_snip(value)}")
            return value.car if name == "car" else value.cdr
        if name == "cons":
            _want_argc("cons", args, 2)
            return Pair(args[0], args[1])
        if name == "list":
            return make_list(args)
        if name == "equal":
            _want_argc("equal", args, 2)
            return T if sexpr_equal(args[0], args[1]) else NIL
        if name == "cw":
            if not args:
                raise _EvalError("cw expects a format string")
            fmt = args[0]
            if not isinstance(fmt, str):
                raise _EvalError(f"cw: format must be a string, got {_snip(fmt)}")
            self.emit(_format_directives(fmt, args[1:], "cw"))
            return NIL
        if name == "error":
            if not args:
                raise _EvalError("error expects a message string")
            fmt = args[0]
            if not isinstance(fmt, str):
                raise _EvalError(f"error: message must be a string, got {_snip(fmt)}")
            raise _EvalError(_format_directives(fmt, args[1:], "error"))
        raise _EvalError(f"unknown builtin: {name}")  # unreachable


def _want_argc(name: str, args: list, n: int) -> None:
    if len(args) != n:
        raise _EvalError(f"{name} expects exactly {n} argument{'s' if n != 1 else ''}, got {len(args)}")


def _is_lambda_form(value: SExpr) -> bool:
    return isinstance(value, Pair) and isinstance(value.car, Symbol) and value.car.name == "lambda"


def evaluate_command(
    session: Session,
    command: SExpr,
    emit: "Callable[[str], None] | None" = None,
) -> CommandOutcome:
    """Evaluate one command against the session.

    Printed chunks go to ``emit`` as they are produced and are also
    recorded on the outcome.  Never raises; global mutations are
    committed only if the command succeeds.  Callers are responsible
    for serializing commands: at most one evaluate_command may run
    against a session at any instant.
    """
    chunks: list[str] = []

    def record(chunk: str) -> None:
        chunks.append(chunk)
        if emit is not None:
            emit(chunk)

    pending = dict(session.globals)
    evaluator = _Evaluator(pending, record)
    try:
        value = evaluator.eval_top(command)
    except _EvalError as exc:
        return CommandOutcome.errored(str(exc), chunks)
    except RecursionError:
        return CommandOutcome.errored(f"recursion depth exceeded (limit {MAX_CALL_DEPTH})", chunks)
    except Exception as exc:  # the shared session must survive evaluator bugs
        return CommandOutcome.errored(f"internal evaluator error: {type(exc).__name__}: {exc}", chunks)
    session.globals = pending
    return CommandOutcome.returned(value, chunks)
