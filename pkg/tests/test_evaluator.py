import random

from replbridge.evaluator import MAX_CALL_DEPTH, Session, evaluate_command
from replbridge.sexpr import NIL, T, Pair, Symbol, parse_sexpr, print_sexpr, sexpr_equal


def run(session, text, emit=None):
    return evaluate_command(session, parse_sexpr(text), emit=emit)


def value_of(session, text):
    outcome = run(session, text)
    assert outcome.ok, outcome.error_message
    return outcome.value


def test_arithmetic():
    s = Session()
    out = run(s, "(+ 1 2)")
    assert out.ok and out.value == 3
    assert out.printed_chunks == ()
    assert value_of(s, "(+)") == 0
    assert value_of(s, "(*)") == 1
    assert value_of(s, "(* 6 7)") == 42
    assert value_of(s, "(- 5)") == -5
    assert value_of(s, "(- 10 1 2)") == 7
    assert value_of(s, "(+ 1 (* 2 3) (- 4 1))") == 10


def test_arithmetic_type_errors():
    s = Session()
    out = run(s, '(+ 1 "a")')
    assert not out.ok
    assert "+" in out.error_message and '"a"' in out.error_message
    assert not run(s, "(-)").ok


def test_comparison():
    s = Session()
    assert value_of(s, "(< 1 2)") == T
    assert value_of(s, "(< 2 1)") == NIL
    assert not run(s, "(< 1 2 3)").ok


def test_cw_formats_and_emits_one_chunk():
    s = Session()
    out = run(s, '(cw "hi ~a!" 5)')
    assert out.ok
    assert out.value == NIL
    assert out.printed_chunks == ("hi 5!",)


def test_cw_directives():
    s = Session()
    assert run(s, '(cw "a~%b")').printed_chunks == ("a\nb",)
    assert run(s, '(cw "~a" "x")').printed_chunks == ('"x"',)
    assert run(s, '(cw "")').printed_chunks == ("",)
    assert run(s, '(cw "x" 1 2)').printed_chunks == ("x",)  # extra args ignored
    assert not run(s, '(cw "~a")').ok
    assert not run(s, '(cw "x~")').ok
    assert not run(s, '(cw "~q")').ok
    assert not run(s, "(cw 5)").ok


def test_car_of_non_pair_is_error():
    s = Session()
    out = run(s, "(car 5)")
    assert not out.ok
    assert "car" in out.error_message
    assert "5" in out.error_message


def test_car_cdr_cons_list():
    s = Session()
    assert value_of(s, "(car (quote (1 2)))") == 1
    assert sexpr_equal(value_of(s, "(cdr (quote (1 2)))"), parse_sexpr("(2)"))
    assert value_of(s, "(car (quote ()))") == NIL
    assert value_of(s, "(cdr NIL)") == NIL
    assert sexpr_equal(value_of(s, "(cons 1 2)"), Pair(1, 2))
    assert value_of(s, "(list)") == NIL
    assert print_sexpr(value_of(s, '(list 1 "a" (quote b))')) == '(1 "a" b)'
    assert not run(s, '(cdr "x")').ok


def test_equal():
    s = Session()
    assert value_of(s, "(equal (list 1 2) (quote (1 2)))") == T
    assert value_of(s, "(equal 1 2)") == NIL
    assert value_of(s, '(equal "a" (quote a))') == NIL


def test_quote():
    s = Session()
    assert value_of(s, "(quote a)") == Symbol("a")
    assert sexpr_equal(value_of(s, "(quote (1 . 2))"), Pair(1, 2))
    assert not run(s, "(quote)").ok
    assert not run(s, "(quote 1 2)").ok


def test_if_only_nil_is_false():
    s = Session()
    assert value_of(s, "(if T 1 2)") == 1
    assert value_of(s, "(if NIL 1 2)") == 2
    assert value_of(s, "(if 0 1 2)") == 1
    assert value_of(s, '(if "" 1 2)') == 1
    assert value_of(s, "(if NIL 1)") == NIL
    assert not run(s, "(if 1)").ok


def test_progn_and_setq_shared_state():
    s = Session()
    out = run(s, "(progn (setq x 7) x)")
    assert out.ok and out.value == 7
    # a later command sees the committed global
    assert value_of(s, "x") == 7
    assert value_of(s, "(progn)") == NIL


def test_setq_restrictions():
    s = Session()
    for text in ("(setq NIL 1)", "(setq T 1)", "(setq car 1)", "(setq quote 1)", "(setq 5 1)"):
        assert not run(s, text).ok


def test_unbound_symbol():
    s = Session()
    out = run(s, "nope")
    assert not out.ok and "nope" in out.error_message


def test_defun_and_call():
    s = Session()
    out = run(s, "(defun inc (x) (+ x 1))")
    assert out.ok and out.value == Symbol("inc")
    assert value_of(s, "(inc 41)") == 42
    # redefinition takes effect
    run(s, "(defun inc (x) (+ x 2))")
    assert value_of(s, "(inc 40)") == 42
    assert not run(s, "(defun car (x) x)").ok
    assert not run(s, "(inc 1 2)").ok


def test_lambda_forms():
    s = Session()
    assert value_of(s, "((lambda (x) (* x x)) 9)") == 81
    assert value_of(s, "((lambda ()))") == NIL
    # lambda evaluates to its own source form
    assert print_sexpr(value_of(s, "(lambda (x) x)")) == "(lambda (x) x)"
    # a quoted lambda can be passed and applied through a variable
    assert value_of(s, "(progn (setq f (lambda (n) (- n 1))) (f 10))") == 9
    for bad in ("(lambda (x x) x)", "(lambda (5) x)", "(lambda x x)", "(lambda (car) x)", "(lambda)"):
        assert not run(s, bad).ok


def test_dynamic_scope_of_parameters():
    s = Session()
    assert value_of(s, "((lambda (x) ((lambda (y) (+ x y)) 2)) 40)") == 42
    run(s, "(setq v 1)")
    run(s, "(defun shadow (v) v)")
    assert value_of(s, "(shadow 9)") == 9
    assert value_of(s, "v") == 1


def test_calling_non_function():
    s = Session()
    assert not run(s, "(5 1)").ok
    run(s, "(setq g 5)")
    out = run(s, "(g 1)")
    assert not out.ok and "g" in out.error_message


def test_malformed_call_args():
    s = Session()
    out = run(s, "(+ 1 . 2)")
    assert not out.ok


def test_explicit_error_builtin():
    s = Session()
    out = run(s, '(error "boom")')
    assert not out.ok and out.error_message == "boom"
    out = run(s, '(error "boom ~a" 7)')
    assert out.error_message == "boom 7"
    assert not run(s, "(error 5)").ok
    assert not run(s, "(error)").ok


def test_session_survives_errors():
    s = Session()
    run(s, "(setq x 1)")
    for text in ("(car 5)", "(", "(error \"x\")", "(undefined)"):
        if text == "(":
            continue  # parse errors handled a layer above
        run(s, text)
    assert value_of(s, "x") == 1


def test_error_never_mutates_globals():
    s = Session()
    run(s, "(setq x 1)")
    out = run(s, "(progn (setq x 99) (car 5))")
    assert not out.ok
    assert value_of(s, "x") == 1
    out = run(s, '(progn (setq fresh 3) (error "no"))')
    assert not out.ok
    assert not run(s, "fresh").ok


def test_error_isolation_random_scripts():
    rng = random.Random(20240817)
    names = ["a", "b", "c", "d"]
    commands = []
    for _ in range(120):
        roll = rng.random()
        name = rng.choice(names)
        if roll < 0.4:
            commands.append(f"(setq {name} {rng.randrange(100)})")
        elif roll < 0.55:
            commands.append(f"(progn (setq {name} {rng.randrange(100)}) (car 5))")
        elif roll < 0.7:
            commands.append('(error "fail ~a" 1)')
        else:
            commands.append(f"(+ {name} 1)")  # may fail while unbound
    full = Session()
    full_outcomes = [run(full, c) for c in commands]
    filtered = Session()
    for command, outcome in zip(commands, full_outcomes):
        if outcome.ok:
            replay = run(filtered, command)
            assert replay.ok
            assert sexpr_equal(replay.value, outcome.value)
    assert filtered.globals == full.globals


def test_determinism_across_fresh_sessions():
    script = [
        "(setq x 10)",
        '(cw "x=~a~%" x)',
        "(defun fact (n) (if (< n 1) 1 (* n (fact (- n 1)))))",
        "(fact 10)",
        "(car 5)",
        '(error "stop")',
        "(list x (fact 3))",
    ]
    runs = []
    for _ in range(2):
        s = Session()
        outcomes = [run(s, c) for c in script]
        runs.append(
            [(o.status, o.error_message, o.printed_chunks, None if o.value is None else print_sexpr(o.value)) for o in outcomes]
        )
    assert runs[0] == runs[1]


def test_emit_matches_printed_chunks():
    s = Session()
    seen = []
    out = run(s, '(progn (cw "a") (cw "b~%") (cw "~a" 3))', emit=seen.append)
    assert out.ok
    assert seen == list(out.printed_chunks) == ["a", "b\n", "3"]
    assert "".join(seen) == "".join(out.printed_chunks)


def test_emit_streams_before_error():
    s = Session()
    seen = []
    out = run(s, '(progn (cw "before") (error "boom"))', emit=seen.append)
    assert not out.ok
    assert seen == ["before"] == list(out.printed_chunks)


def test_recursion_depth_cap_exact():
    s = Session()
    run(s, "(defun deep (n) (if (< n 1) 0 (deep (- n 1))))")
    # (deep k) performs k+1 nested applications; the cap is MAX_CALL_DEPTH
    ok = run(s, f"(deep {MAX_CALL_DEPTH - 1})")
    assert ok.ok and ok.value == 0
    over = run(s, f"(deep {MAX_CALL_DEPTH})")
    assert not over.ok
    assert "recursion depth" in over.error_message
    # the session is still usable afterwards
    assert value_of(s, "(+ 1 1)") == 2


def test_deep_quoted_data_is_fine():
    s = Session()
    depth = 30_000
    text = "(quote " + "(" * depth + "1" + ")" * depth + ")"
    out = run(s, text)
    assert out.ok


def test_fibonacci_sanity():
    s = Session()
    run(s, "(defun fib (n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2)))))")
    assert value_of(s, "(fib 15)") == 610
