import numpy as np
import pytest

from phaseport import expr
from phaseport.corpus import (
    ModelFileError, UnknownModelError,
    builtin_model, builtin_names, parse_model_file, run_expectations,
    serialize_model,
)
from phaseport.phase1d import Model1D
from phaseport.phase2d import Model2D

PPOUR_FILE = """\
[model]
name = ppour
kind = ode2
vars = x y
[params]
r = 3.0
[equations]
x = 3*x*(1-x) - 1.5*x*y   # prey
y = 0.5*x*y - 0.25*y
[domain]
x = 0 2
y = 0 3
"""


class TestRegistry:
    def test_known_names(self):
        names = builtin_names()
        for expected in ("ppour", "logistic", "holling_tanner", "brusselator", "budworm"):
            assert expected in names

    def test_unknown_name_lists_known_models(self):
        with pytest.raises(UnknownModelError) as err:
            builtin_model("nosuchmodel")
        assert "ppour" in str(err.value)

    def test_ppour_equations(self):
        m = builtin_model("ppour").model
        assert isinstance(m, Model2D)
        assert expr.evaluate(m.f, {"x": 1.0, "y": 1.0}) == -1.5
        assert expr.evaluate(m.g, {"x": 1.0, "y": 1.0}) == 0.25

    def test_predator_prey_with_response_params(self):
        m = builtin_model("holling_tanner").model
        assert m.params["a"] == 1.0
        assert m.params["b"] == 0.2
        assert m.params["r"] == 1.0
        assert m.params["K"] == 0.7
        # d=0.1 puts the oscillation onset between K=0.7 and K=1.0
        assert m.params["d"] == 0.1

    def test_budworm_is_a_documented_gap(self):
        rec = builtin_model("budworm")
        assert not rec.available
        assert "no closed form" in rec.note

    def test_records_are_fresh_instances(self):
        a = builtin_model("logistic").model
        b = builtin_model("logistic").model
        assert a is not b


@pytest.mark.parametrize("name", [n for n in builtin_names() if n != "budworm"])
def test_reference_expectations(name):
    """Driver: every registered model reproduces its reference expectations."""
    record = builtin_model(name)
    results = run_expectations(record)
    assert results or record.kind  # models without expectations are still parseable
    failures = [
        f"{exp.check}{exp.args} [{exp.provenance}]: {detail}"
        for exp, ok, detail in results if not ok
    ]
    assert not failures, "\n".join(failures)


class TestModelFiles:
    def test_round_trip_matches_builtin(self):
        record = parse_model_file(PPOUR_FILE)
        builtin = builtin_model("ppour").model
        parsed = record.model
        rng = np.random.default_rng(5)
        for _ in range(100):
            env = {"x": float(rng.uniform(0, 2)), "y": float(rng.uniform(0, 3))}
            assert expr.evaluate(parsed.f, {**env, **parsed.params}) == \
                expr.evaluate(builtin.f, env)
            assert expr.evaluate(parsed.g, {**env, **parsed.params}) == \
                expr.evaluate(builtin.g, env)

    def test_serialize_parse_round_trip(self):
        for name in ("ppour", "logistic", "holling_tanner"):
            record = builtin_model(name)
            text = serialize_model(record)
            again = parse_model_file(text)
            rng = np.random.default_rng(17)
            m0, m1 = record.model, again.model
            if isinstance(m0, Model1D):
                for _ in range(100):
                    env = {m0.var: float(rng.uniform(m0.lo, m0.hi))}
                    assert expr.evaluate(m1.f, {**env, **m1.params}) == \
                        expr.evaluate(m0.f, {**env, **m0.params})
            else:
                for _ in range(100):
                    env = {
                        m0.x_name: float(rng.uniform(m0.x_lo, m0.x_hi)),
                        m0.y_name: float(rng.uniform(m0.y_lo, m0.y_hi)),
                    }
                    assert expr.evaluate(m1.f, {**env, **m1.params}) == \
                        expr.evaluate(m0.f, {**env, **m0.params})
                    assert expr.evaluate(m1.g, {**env, **m1.params}) == \
                        expr.evaluate(m0.g, {**env, **m0.params})

    def test_serialization_is_canonical(self):
        assert serialize_model(builtin_model("ppour")) == \
            serialize_model(builtin_model("ppour"))

    def test_ode1_file(self):
        record = parse_model_file(
            "[model]\nname = decay\nkind = ode1\nvars = n\n"
            "[params]\nk = 2.0\n[equations]\nn = -k*n\n[domain]\nn = -1 1\n"
        )
        assert isinstance(record.model, Model1D)
        assert record.model.params == {"k": 2.0}

    def test_missing_equations_section(self):
        with pytest.raises(ModelFileError) as err:
            parse_model_file("[model]\nname = m\nkind = ode1\nvars = x\n[domain]\nx = 0 1\n")
        assert "[equations]" in str(err.value)

    def test_undeclared_identifier(self):
        with pytest.raises(ModelFileError) as err:
            parse_model_file(
                "[model]\nname = m\nkind = ode1\nvars = x\n"
                "[equations]\nx = -x + q\n[domain]\nx = 0 1\n"
            )
        assert "'q'" in str(err.value)

    def test_inverted_domain(self):
        with pytest.raises(ModelFileError) as err:
            parse_model_file(
                "[model]\nname = m\nkind = ode1\nvars = x\n"
                "[equations]\nx = -x\n[domain]\nx = 2 1\n"
            )
        assert "inverted" in str(err.value)

    def test_duplicate_key(self):
        with pytest.raises(ModelFileError) as err:
            parse_model_file(
                "[model]\nname = m\nkind = ode1\nvars = x\n"
                "[params]\nk = 1\nk = 2\n[equations]\nx = -k*x\n[domain]\nx = 0 1\n"
            )
        assert "line 7" in str(err.value)

    def test_bad_kind(self):
        with pytest.raises(ModelFileError):
            parse_model_file(
                "[model]\nname = m\nkind = ode3\nvars = x\n"
                "[equations]\nx = -x\n[domain]\nx = 0 1\n"
            )

    def test_wrong_variable_count(self):
        with pytest.raises(ModelFileError):
            parse_model_file(
                "[model]\nname = m\nkind = ode2\nvars = x\n"
                "[equations]\nx = -x\n[domain]\nx = 0 1\n"
            )

    def test_equation_for_undeclared_variable(self):
        with pytest.raises(ModelFileError):
            parse_model_file(
                "[model]\nname = m\nkind = ode1\nvars = x\n"
                "[equations]\nx = -x\nz = 1\n[domain]\nx = 0 1\n"
            )

    def test_syntax_error_carries_line_number(self):
        with pytest.raises(ModelFileError) as err:
            parse_model_file(
                "[model]\nname = m\nkind = ode1\nvars = x\n"
                "[equations]\nx = 2*\n[domain]\nx = 0 1\n"
            )
        assert err.value.line == 6
