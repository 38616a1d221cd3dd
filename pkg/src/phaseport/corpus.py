"""Built-in study models with reference expectations, plus model-file I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import expr
from .cycles import CycleOptions, detect_limit_cycle, hopf_scan
from .phase1d import Model1D, build_phase_line, find_equilibria_1d, fold_scan_1d
from .phase2d import (
    Model2D, classify_equilibrium_2d, find_equilibria_2d, jacobian_at,
)

__all__ = [
    "Expectation", "ModelRecord", "ModelFileError", "UnknownModelError",
    "builtin_model", "builtin_names", "parse_model_file", "serialize_model",
    "run_expectations",
]

PUBLISHED = "published"
DERIVED = "derived"
TRIVIAL = "trivial"


@dataclass(frozen=True)
class Expectation:
    """One reference check: a named library operation plus expected outcome."""
    check: str
    args: tuple
    expected: object
    tol: float | None
    provenance: str


@dataclass
class ModelRecord:
    name: str
    kind: str                      # "ode1" | "ode2"
    model: Model1D | Model2D | None
    expectations: tuple[Expectation, ...] = ()
    note: str = ""

    @property
    def available(self) -> bool:
        return self.model is not None


class UnknownModelError(KeyError):
    pass


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


# ---------------------------------------------------------------------------
# Registry


def _model1d(f: str, var: str, params: dict, lo: float, hi: float, name: str) -> Model1D:
    return Model1D(expr.parse(f), var, params, lo, hi, name)


def _model2d(f: str, g: str, x: str, y: str, params: dict, dom, name: str) -> Model2D:
    return Model2D(expr.parse(f), expr.parse(g), x, y, params,
                   dom[0], dom[1], dom[2], dom[3], name)


def _build_malthus() -> ModelRecord:
    m = _model1d("k*n", "n", {"k": 4.0}, -1.0, 30.0, "malthus")
    return ModelRecord("malthus", "ode1", m, (
        Expectation("equilibria_1d", (), [0.0], 1e-8, TRIVIAL),
        Expectation("class_1d", (0.0,), "unstable", None, PUBLISHED),
    ))


def _build_logistic() -> ModelRecord:
    m = _model1d("r*n*(1-n/k)", "n", {"r": 2.0, "k": 3.0}, -1.0, 5.0, "logistic")
    return ModelRecord("logistic", "ode1", m, (
        Expectation("equilibria_1d", (), [0.0, 3.0], 1e-8, PUBLISHED),
        Expectation("class_1d", (3.0,), "stable", None, PUBLISHED),
        Expectation("class_1d", (0.0,), "unstable", None, PUBLISHED),
        Expectation("basins", (), [(3.0, (0.0, 5.0))], 1e-6, PUBLISHED),
    ))


def _build_logistic_harvest() -> ModelRecord:
    m = _model1d("r*n*(1-n/k) - h", "n", {"r": 2.0, "k": 3.0, "h": 0.0},
                 -1.0, 5.0, "logistic_harvest")
    return ModelRecord("logistic_harvest", "ode1", m, (
        Expectation("fold", ("h", 0.0, 2.0, 200), 1.5, 1e-6, PUBLISHED),
    ))


_GENE_FOLD = ((6.0 - math.sqrt(21.0)) / 15.0)
_GENE_FOLD = _GENE_FOLD * (_GENE_FOLD - 0.2) * (_GENE_FOLD - 1.0)  # = 0.00902760864...


def _build_gene_product() -> ModelRecord:
    m = _model1d("-x*(x-0.2)*(x-1) + s", "x", {"s": 0.0}, -0.5, 1.5, "gene_product")
    return ModelRecord("gene_product", "ode1", m, (
        Expectation("equilibria_1d", (), [0.0, 0.2, 1.0], 1e-8, TRIVIAL),
        # exact dip depth of -x(x-0.2)(x-1); 0.009 to one significant figure
        Expectation("fold", ("s", 0.0, 0.02, 100), _GENE_FOLD, 1e-6, DERIVED),
    ))


def _build_ppour() -> ModelRecord:
    m = _model2d("3*x*(1-x) - 1.5*x*y", "0.5*x*y - 0.25*y", "x", "y", {},
                 (0.0, 2.0, 0.0, 3.0), "ppour")
    lam_lo = (-1.5 - math.sqrt(0.75)) / 2.0
    lam_hi = (-1.5 + math.sqrt(0.75)) / 2.0
    return ModelRecord("ppour", "ode2", m, (
        Expectation("equilibria_2d", (), [(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], 1e-8, PUBLISHED),
        Expectation("class_2d", ((0.0, 0.0),), "saddle", None, PUBLISHED),
        Expectation("class_2d", ((1.0, 0.0),), "saddle", None, PUBLISHED),
        Expectation("class_2d", ((0.5, 1.0),), "stable_node", None, PUBLISHED),
        Expectation("jacobian", ((0.5, 1.0),), [[-1.5, -0.75], [0.5, 0.0]], 1e-10, PUBLISHED),
        # roots of lambda^2 + 1.5 lambda + 0.375 = 0
        Expectation("eigenvalues", ((0.5, 1.0),), [(lam_lo, 0.0), (lam_hi, 0.0)], 1e-9, DERIVED),
    ))


def _build_lotka_volterra() -> ModelRecord:
    m = _model2d("a*N - b*N*P", "c*N*P - d*P", "N", "P",
                 {"a": 4.0, "b": 2.0, "c": 2.0, "d": 4.0},
                 (0.0, 4.0, 0.0, 4.0), "lotka_volterra")
    return ModelRecord("lotka_volterra", "ode2", m, (
        Expectation("equilibria_2d", (), [(0.0, 0.0), (2.0, 2.0)], 1e-8, PUBLISHED),
        Expectation("jacobian", ((2.0, 2.0),), [[0.0, -4.0], [4.0, 0.0]], 1e-10, PUBLISHED),
        Expectation("class_2d", ((2.0, 2.0),), "center", None, PUBLISHED),
    ))


def _build_algae() -> ModelRecord:
    m = _model2d("2*x*(1-y)", "2 - y - x^2", "x", "y", {},
                 (0.0, 3.0, 0.0, 3.0), "algae")
    return ModelRecord("algae", "ode2", m, (
        Expectation("equilibria_2d", (), [(0.0, 2.0), (1.0, 1.0)], 1e-8, PUBLISHED),
        Expectation("class_2d", ((0.0, 2.0),), "stable_node", None, PUBLISHED),
        Expectation("class_2d", ((1.0, 1.0),), "saddle", None, PUBLISHED),
    ))


def _build_si_epidemic() -> ModelRecord:
    m = _model2d("B - beta*S*I - mu*S", "beta*S*I - alpha*I", "S", "I",
                 {"B": 1.0, "beta": 1.0, "mu": 0.5, "alpha": 0.5},
                 (0.0, 4.0, 0.0, 4.0), "si_epidemic")
    return ModelRecord("si_epidemic", "ode2", m, (
        Expectation("equilibria_2d", (), [(0.5, 1.5), (2.0, 0.0)], 1e-8, PUBLISHED),
    ))


def _build_mrna_protein() -> ModelRecord:
    m = _model2d("a/(1+P) - b*M", "c*M - d*P", "M", "P",
                 {"a": 1.0, "b": 1.0, "c": 1.0, "d": 1.0},
                 (0.0, 3.0, 0.0, 3.0), "mrna_protein")
    p_star = (-1.0 + math.sqrt(5.0)) / 2.0
    return ModelRecord("mrna_protein", "ode2", m, (
        Expectation("equilibria_2d", (), [(p_star, p_star)], 1e-8, PUBLISHED),
        Expectation("class_2d", ((p_star, p_star),), "stable_spiral", None, DERIVED),
    ))


def _build_cardiac() -> ModelRecord:
    m = _model2d("-e*(e-a)*(e-1) - g", "eps*e", "e", "g",
                 {"a": 0.25, "eps": 0.01},
                 (-0.5, 1.5, -0.5, 1.5), "cardiac")
    return ModelRecord("cardiac", "ode2", m, (
        Expectation("equilibria_2d", (), [(0.0, 0.0)], 1e-8, PUBLISHED),
        # a^2 > 4*eps puts the recovery in the monotonous (node) regime
        Expectation("class_2d", ((0.0, 0.0),), "stable_node", None, PUBLISHED),
    ))


def _ht_equilibrium(K: float) -> float:
    # interior equilibrium with r = a = 1, d = 0.1:  P^2 + 0.1 P - 0.1 K = 0
    return (-0.1 + math.sqrt(0.01 + 0.4 * K)) / 2.0


def _build_holling_tanner() -> ModelRecord:
    # d=0.1 places the oscillation onset between K=0.7 (stable spiral)
    # and K=1.0 (stable limit cycle)
    m = _model2d("r*P*(1-P/K) - a*R*P/(d+P)", "b*R*(1-R/P)", "P", "R",
                 {"a": 1.0, "b": 0.2, "r": 1.0, "d": 0.1, "K": 0.7},
                 (0.02, 2.0, 0.02, 2.0), "holling_tanner")
    p07 = _ht_equilibrium(0.7)
    return ModelRecord("holling_tanner", "ode2", m, (
        Expectation("equilibria_2d", (), [(p07, p07)], 1e-8, DERIVED),
        Expectation("class_2d", ((p07, p07),), "stable_spiral", None, PUBLISHED),
        Expectation("hopf_bracket", ("K", 0.7, 1.6, 40), (0.7, 1.0), None, PUBLISHED),
        Expectation("cycle", ({"K": 1.0},), (True, "stable"), None, PUBLISHED),
        Expectation("cycle", ({"K": 0.7},), (False, None), None, PUBLISHED),
    ))


def _build_brusselator() -> ModelRecord:
    m = _model2d("a - (b+1)*x + x^2*y", "b*x - x^2*y", "x", "y",
                 {"a": 1.0, "b": 2.5}, (0.0, 4.0, 0.0, 4.0), "brusselator")
    return ModelRecord("brusselator", "ode2", m, (
        Expectation("equilibria_2d", (), [(1.0, 2.5)], 1e-8, TRIVIAL),
        # tr J = b - 1 - a^2 vanishes at b = 2 for a = 1 (det J = a^2 > 0)
        Expectation("hopf", ("b", 1.5, 2.5, 100), 2.0, 1e-6, DERIVED),
        Expectation("cycle", ({"b": 2.5},), (True, "stable"), None, DERIVED),
        Expectation("cycle", ({"b": 1.5},), (False, None), None, DERIVED),
    ))


def _build_compartment() -> ModelRecord:
    m = _model2d("-(a+c)*x + b*y", "a*x - (b+e)*y", "x", "y",
                 {"a": 0.5, "b": 2.0, "c": 4.5, "e": 3.0},
                 (-2.0, 2.0, -2.0, 2.0), "compartment")
    return ModelRecord("compartment", "ode2", m, (
        Expectation("equilibria_2d", (), [(0.0, 0.0)], 1e-8, TRIVIAL),
        Expectation("class_2d", ((0.0, 0.0),), "stable_node", None, PUBLISHED),
        Expectation("eigenvalues", ((0.0, 0.0),), [(-6.0, 0.0), (-4.0, 0.0)], 1e-9, PUBLISHED),
    ))


def _build_diffusion() -> ModelRecord:
    m = _model2d("-(k/v1)*(c1 - c2)", "(k/v2)*(c1 - c2)", "c1", "c2",
                 {"k": 0.2, "v1": 20.0, "v2": 5.0},
                 (0.0, 4.0, 0.0, 4.0), "diffusion")
    return ModelRecord("diffusion", "ode2", m, (
        # det J = 0: a whole line of equilibria, classified degenerate
        Expectation("class_2d", ((1.0, 1.0),), "degenerate", None, PUBLISHED),
    ))


def _build_budworm() -> ModelRecord:
    return ModelRecord(
        "budworm", "ode1", None,
        note="right-hand side is only known as a sketched graph; no closed form to register",
    )


_BUILDERS = {
    "malthus": _build_malthus,
    "logistic": _build_logistic,
    "logistic_harvest": _build_logistic_harvest,
    "gene_product": _build_gene_product,
    "ppour": _build_ppour,
    "lotka_volterra": _build_lotka_volterra,
    "algae": _build_algae,
    "si_epidemic": _build_si_epidemic,
    "mrna_protein": _build_mrna_protein,
    "cardiac": _build_cardiac,
    "holling_tanner": _build_holling_tanner,
    "brusselator": _build_brusselator,
    "compartment": _build_compartment,
    "diffusion": _build_diffusion,
    "budworm": _build_budworm,
}


def builtin_names() -> list[str]:
    return sorted(_BUILDERS)


def builtin_model(name: str) -> ModelRecord:
    """A fresh ModelRecord for a registered model name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownModelError(
            f"unknown model {name!r}; known models: {', '.join(builtin_names())}"
        ) from None
    return builder()


# ---------------------------------------------------------------------------
# Expectation driver


def run_expectations(record: ModelRecord) -> list[tuple[Expectation, bool, str]]:
    """Evaluate every expectation of ``record`` against the library."""
    results = []
    for exp in record.expectations:
        try:
            ok, detail = _run_one(record, exp)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((exp, ok, detail))
    return results


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def _run_one(record: ModelRecord, exp: Expectation) -> tuple[bool, str]:
    m = record.model
    if exp.check == "equilibria_1d":
        got = [e.x for e in find_equilibria_1d(m)]
        want = exp.expected
        ok = len(got) == len(want) and all(_close(g, w, exp.tol) for g, w in zip(got, want))
        return ok, f"got {got}"
    if exp.check == "class_1d":
        from .phase1d import classify_equilibrium_1d
        got = str(classify_equilibrium_1d(m, exp.args[0]).stability)
        return got == exp.expected, f"got {got}"
    if exp.check == "basins":
        line = build_phase_line(m)
        got = [(a, iv) for a, iv in line.basins]
        want = exp.expected
        ok = len(got) == len(want) and all(
            _close(g[0], w[0], exp.tol)
            and _close(g[1][0], w[1][0], exp.tol)
            and _close(g[1][1], w[1][1], exp.tol)
            for g, w in zip(got, want)
        )
        return ok, f"got {got}"
    if exp.check == "fold":
        param, lo, hi, steps = exp.args
        got = fold_scan_1d(m, param, (lo, hi), steps)
        return got is not None and _close(got, exp.expected, exp.tol), f"got {got}"
    if exp.check == "equilibria_2d":
        got = find_equilibria_2d(m)
        want = exp.expected
        ok = len(got) == len(want) and all(
            _close(g[0], w[0], exp.tol) and _close(g[1], w[1], exp.tol)
            for g, w in zip(got, want)
        )
        return ok, f"got {got}"
    if exp.check == "class_2d":
        got = str(classify_equilibrium_2d(m, exp.args[0]).classification)
        return got == exp.expected, f"got {got}"
    if exp.check == "jacobian":
        jac = jacobian_at(m, exp.args[0])
        want = exp.expected
        ok = all(
            _close(g, w, exp.tol)
            for g, w in zip((jac.a, jac.b, jac.c, jac.d),
                            (want[0][0], want[0][1], want[1][0], want[1][1]))
        )
        return ok, f"got {jac}"
    if exp.check == "eigenvalues":
        rep = classify_equilibrium_2d(m, exp.args[0])
        z1, z2 = rep.eigen.values.as_complex_pair()
        got = sorted([(z1.re, z1.im), (z2.re, z2.im)])
        want = sorted([tuple(w) for w in exp.expected])
        ok = all(
            _close(g[0], w[0], exp.tol) and _close(g[1], w[1], exp.tol)
            for g, w in zip(got, want)
        )
        return ok, f"got {got}"
    if exp.check == "hopf":
        param, lo, hi, steps = exp.args
        res = hopf_scan(m, param, (lo, hi), steps)
        if res is None:
            return exp.expected is None, "got None"
        return _close(res.critical, exp.expected, exp.tol), f"got {res.critical}"
    if exp.check == "hopf_bracket":
        param, lo, hi, steps = exp.args
        res = hopf_scan(m, param, (lo, hi), steps)
        blo, bhi = exp.expected
        ok = res is not None and blo < res.critical < bhi
        return ok, f"got {None if res is None else res.critical}"
    if exp.check == "cycle":
        overrides = exp.args[0]
        model = m
        for k, v in overrides.items():
            model = model.with_param(k, v)
        eqs = find_equilibria_2d(model)
        interior = max(eqs, key=lambda e: min(e[0] - model.x_lo, model.x_hi - e[0],
                                              e[1] - model.y_lo, model.y_hi - e[1]))
        rep = detect_limit_cycle(model, interior)
        want_found, want_stability = exp.expected
        ok = rep.found == want_found and (not want_found or rep.stability == want_stability)
        return ok, f"got found={rep.found} stability={rep.stability} ({rep.reason})"
    raise ValueError(f"unknown expectation check {exp.check!r}")


# ---------------------------------------------------------------------------
# Model files


def parse_model_file(text: str) -> ModelRecord:
    """Parse the line-oriented model format into a ModelRecord.

    Sections [model], [params], [equations], [domain]; '#' starts a comment;
    keys are unique per section; '=' is whitespace-insensitive.
    """
    sections: dict[str, dict[str, str]] = {}
    lines_of: dict[str, dict[str, int]] = {}
    current: str | None = None
    order: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("model", "params", "equations", "domain"):
                raise ModelFileError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ModelFileError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            lines_of[current] = {}
            order[current] = []
            continue
        if current is None:
            raise ModelFileError("content before any [section] header", lineno)
        if "=" not in line:
            raise ModelFileError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ModelFileError("empty key", lineno)
        if key in sections[current]:
            raise ModelFileError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = value
        lines_of[current][key] = lineno
        order[current].append(key)

    for required in ("model", "equations", "domain"):
        if required not in sections:
            raise ModelFileError(f"missing required section [{required}]")

    meta = sections["model"]
    name = meta.get("name", "")
    kind = meta.get("kind")
    if kind not in ("ode1", "ode2"):
        raise ModelFileError(f"kind must be ode1 or ode2, got {kind!r}",
                             lines_of["model"].get("kind"))
    if "vars" not in meta:
        raise ModelFileError("missing 'vars' in [model]", None)
    vars_ = meta["vars"].split()
    want_nvars = 1 if kind == "ode1" else 2
    if len(vars_) != want_nvars:
        raise ModelFileError(f"{kind} needs exactly {want_nvars} variable(s), got {vars_}",
                             lines_of["model"].get("vars"))

    params: dict[str, float] = {}
    for key in order.get("params", []):
        value = sections["params"][key]
        try:
            params[key] = float(value)
        except ValueError:
            raise ModelFileError(f"parameter {key!r} has non-numeric value {value!r}",
                                 lines_of["params"][key]) from None

    equations: dict[str, expr.Expr] = {}
    for var in vars_:
        if var not in sections["equations"]:
            raise ModelFileError(f"missing equation for variable {var!r}")
    for key in order["equations"]:
        if key not in vars_:
            raise ModelFileError(f"equation for {key!r}, which is not a declared variable",
                                 lines_of["equations"][key])
        src = sections["equations"][key]
        try:
            tree = expr.parse(src)
        except expr.ParseError as exc:
            raise ModelFileError(f"equation for {key!r}: {exc}",
                                 lines_of["equations"][key]) from exc
        undeclared = expr.identifiers(tree) - set(vars_) - set(params)
        if undeclared:
            raise ModelFileError(
                f"undeclared identifier {sorted(undeclared)[0]!r} in equation for {key!r}",
                lines_of["equations"][key],
            )
        equations[key] = tree

    bounds: dict[str, tuple[float, float]] = {}
    for var in vars_:
        if var not in sections["domain"]:
            raise ModelFileError(f"missing domain for variable {var!r}")
        parts = sections["domain"][var].split()
        lineno = lines_of["domain"][var]
        if len(parts) != 2:
            raise ModelFileError(f"domain for {var!r} must be 'lo hi'", lineno)
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise ModelFileError(f"non-numeric domain bound for {var!r}", lineno) from None
        if not lo < hi:
            raise ModelFileError(f"inverted domain bounds for {var!r}: {lo} >= {hi}", lineno)
        bounds[var] = (lo, hi)

    if kind == "ode1":
        v = vars_[0]
        model = Model1D(equations[v], v, params, bounds[v][0], bounds[v][1], name)
    else:
        vx, vy = vars_
        model = Model2D(equations[vx], equations[vy], vx, vy, params,
                        bounds[vx][0], bounds[vx][1], bounds[vy][0], bounds[vy][1], name)
    return ModelRecord(name, kind, model)


def serialize_model(record: ModelRecord) -> str:
    """Canonical model-file text (params sorted, floats via repr)."""
    if record.model is None:
        raise ValueError(f"model {record.name!r} has no equations to serialize")
    m = record.model
    out = ["[model]", f"name = {record.name}", f"kind = {record.kind}"]
    if isinstance(m, Model1D):
        vars_ = [m.var]
        eqs = [(m.var, m.f)]
        bounds = [(m.var, m.lo, m.hi)]
    else:
        vars_ = [m.x_name, m.y_name]
        eqs = [(m.x_name, m.f), (m.y_name, m.g)]
        bounds = [(m.x_name, m.x_lo, m.x_hi), (m.y_name, m.y_lo, m.y_hi)]
    out.append(f"vars = {' '.join(vars_)}")
    out.append("[params]")
    for k in sorted(m.params):
        out.append(f"{k} = {m.params[k]!r}")
    out.append("[equations]")
    for var, tree in eqs:
        out.append(f"{var} = {expr.render(tree)}")
    out.append("[domain]")
    for var, lo, hi in bounds:
        out.append(f"{var} = {lo!r} {hi!r}")
    return "\n".join(out) + "\n"
