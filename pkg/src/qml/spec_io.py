"""Ideal specification documents and run configurations.

An ideal spec is JSON of the form::

    {"d": 3,
     "components": [{"name": "I1", "assumed": "prime",
                     "generators": [{"coefficients": [{"re": 1, "im": 0, "alpha": [1, 0, 0]}]}]}],
     "presets": {"kind": "j_theta_power", "theta": [{"re": 1, "im": 0}, ...], "power": 2}}

``components`` may be empty when ``presets`` is given.  A preset is expanded
into an extra component named ``"preset"``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .ideal import GradedIdeal, IdealIntersection, _GradedBase, j_power, j_theta
from .poly import EPS_UNIT, HPoly, ThetaDirection, w_basis

ASSUMPTIONS = ("prime", "primary", "unknown")
PRESET_KINDS = ("j_theta", "j_theta_power")


class SpecError(ValueError):
    """Schema violation, carrying the JSON path of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


Term = tuple[float, float, tuple[int, ...]]


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    generators: tuple[tuple[Term, ...], ...]
    assumed: str = "unknown"

    def polynomials(self, d: int) -> list[HPoly]:
        out = []
        for terms in self.generators:
            acc: dict = {}
            for re_, im_, alpha in terms:
                acc[alpha] = acc.get(alpha, 0) + complex(re_, im_)
            out.append(HPoly(d, acc))
        return out


@dataclass(frozen=True)
class PresetSpec:
    kind: str
    theta: tuple[complex, ...]
    power: int = 1


@dataclass(frozen=True)
class IdealSpec:
    d: int
    components: tuple[ComponentSpec, ...] = ()
    presets: PresetSpec | None = None

    # -- construction ----------------------------------------------------

    def theta(self) -> ThetaDirection | None:
        return ThetaDirection(self.presets.theta) if self.presets else None

    def power(self) -> int | None:
        if self.presets is None:
            return None
        return self.presets.power if self.presets.kind == "j_theta_power" else 1

    def component_ideals(self) -> list[GradedIdeal]:
        out = [GradedIdeal(self.d, c.polynomials(self.d), name=c.name) for c in self.components]
        if self.presets is not None:
            theta = self.theta()
            if self.presets.kind == "j_theta":
                ideal = j_theta(theta)
            else:
                ideal = j_power(self.d, self.presets.power, theta)
            ideal.name = "preset"
            out.append(ideal)
        return out

    def ideal(self) -> _GradedBase:
        comps = self.component_ideals()
        return comps[0] if len(comps) == 1 else IdealIntersection(comps)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        doc: dict[str, Any] = {
            "d": self.d,
            "components": [
                {
                    "name": c.name,
                    "assumed": c.assumed,
                    "generators": [
                        {"coefficients": [{"re": r, "im": i, "alpha": list(a)} for r, i, a in g]}
                        for g in c.generators
                    ],
                }
                for c in self.components
            ],
        }
        if self.presets is not None:
            doc["presets"] = {
                "kind": self.presets.kind,
                "theta": [{"re": t.real, "im": t.imag} for t in self.presets.theta],
                "power": self.presets.power,
            }
        return doc


def serialize_ideal_spec(spec: IdealSpec) -> str:
    return json.dumps(spec.to_dict(), sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# parsing


def _require(obj: Any, key: str, path: str, kind: type | tuple) -> Any:
    if not isinstance(obj, dict):
        raise SpecError(path, "expected an object")
    if key not in obj:
        raise SpecError(f"{path}.{key}" if path else key, "missing field")
    val = obj[key]
    # bool is an int subclass; reject it for numeric fields
    if not isinstance(val, kind) or (isinstance(val, bool) and bool not in _as_tuple(kind)):
        raise SpecError(f"{path}.{key}" if path else key, f"expected {_kind_name(kind)}")
    return val


def _as_tuple(kind) -> tuple:
    return kind if isinstance(kind, tuple) else (kind,)


def _kind_name(kind) -> str:
    return " or ".join(k.__name__ for k in _as_tuple(kind))


def _number(obj: dict, key: str, path: str) -> float:
    return float(_require(obj, key, path, (int, float)))


def parse_ideal_spec(document: str | dict) -> IdealSpec:
    """Validate a spec document (JSON text or already-decoded dict)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecError("", f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SpecError("", "top level must be an object")
    d = _require(document, "d", "", int)
    if d < 1:
        raise SpecError("d", "must be >= 1")
    comps_raw = document.get("components", [])
    if not isinstance(comps_raw, list):
        raise SpecError("components", "expected a list")
    components = []
    gen_index = 0
    for ci, comp in enumerate(comps_raw):
        cpath = f"components[{ci}]"
        name = _require(comp, "name", cpath, str)
        assumed = comp.get("assumed", "unknown")
        if assumed not in ASSUMPTIONS:
            raise SpecError(f"{cpath}.assumed", f"must be one of {list(ASSUMPTIONS)}")
        gens_raw = _require(comp, "generators", cpath, list)
        gens = []
        for gi, gen in enumerate(gens_raw):
            gpath = f"{cpath}.generators[{gi}]"
            terms_raw = _require(gen, "coefficients", gpath, list)
            if not terms_raw:
                raise SpecError(f"{gpath}.coefficients", f"generator {gen_index} has no terms")
            terms = []
            degrees = set()
            for ti, term in enumerate(terms_raw):
                tpath = f"{gpath}.coefficients[{ti}]"
                re_ = _number(term, "re", tpath)
                im_ = _number(term, "im", tpath)
                alpha = _require(term, "alpha", tpath, list)
                if len(alpha) != d:
                    raise SpecError(
                        f"{tpath}.alpha",
                        f"generator {gen_index} term {ti}: alpha length {len(alpha)} ≠ d={d}",
                    )
                if not all(isinstance(a, int) and not isinstance(a, bool) and a >= 0 for a in alpha):
                    raise SpecError(f"{tpath}.alpha", "exponents must be non-negative integers")
                terms.append((re_, im_, tuple(alpha)))
                if re_ or im_:
                    degrees.add(sum(alpha))
            if len(degrees) > 1:
                raise SpecError(
                    gpath, f"generator {gen_index} is not homogeneous (degrees {sorted(degrees)})"
                )
            if not degrees:
                raise SpecError(gpath, f"generator {gen_index} is zero")
            if degrees == {0}:
                raise SpecError(gpath, f"generator {gen_index} is a constant (unit ideal)")
            gens.append(tuple(terms))
            gen_index += 1
        components.append(ComponentSpec(name, tuple(gens), assumed))
    presets = None
    if "presets" in document and document["presets"] is not None:
        presets = _parse_preset(document["presets"], d)
    if not components and presets is None:
        raise SpecError("components", "need at least one component or a preset")
    return IdealSpec(d, tuple(components), presets)


def _parse_preset(raw: Any, d: int) -> PresetSpec:
    kind = _require(raw, "kind", "presets", str)
    if kind not in PRESET_KINDS:
        raise SpecError("presets.kind", f"must be one of {list(PRESET_KINDS)}")
    theta_raw = raw.get("theta")
    if theta_raw is None:
        theta = (1 + 0j,) * d
    else:
        if not isinstance(theta_raw, list):
            raise SpecError("presets.theta", "expected a list")
        if len(theta_raw) != d:
            raise SpecError("presets.theta", f"length {len(theta_raw)} ≠ d={d}")
        theta = []
        for k, t in enumerate(theta_raw):
            path = f"presets.theta[{k}]"
            z = complex(_number(t, "re", path), _number(t, "im", path))
            if abs(abs(z) - 1) > EPS_UNIT:
                raise SpecError(path, f"not unimodular (|theta| = {abs(z):.12g})")
            theta.append(z)
        theta = tuple(theta)
    power = raw.get("power", 1)
    if not isinstance(power, int) or isinstance(power, bool) or power < 1:
        raise SpecError("presets.power", "must be an integer >= 1")
    if kind == "j_theta" and power != 1:
        raise SpecError("presets.power", "j_theta takes no power; use j_theta_power")
    if d < 2:
        raise SpecError("d", "presets need d >= 2")
    return PresetSpec(kind, theta, power)


def load_ideal_spec(path: str) -> IdealSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError("", f"cannot read {path}: {exc.strerror}") from None
    return parse_ideal_spec(text)


def j_power_spec(d: int, N: int, theta=None) -> IdealSpec:
    theta = tuple(complex(t) for t in theta) if theta is not None else (1 + 0j,) * d
    return IdealSpec(d, (), PresetSpec("j_theta_power", theta, N))


def spec_from_polynomials(d: int, components: dict[str, list[HPoly]]) -> IdealSpec:
    comps = []
    for name, gens in components.items():
        comps.append(
            ComponentSpec(
                name,
                tuple(
                    tuple((c.real, c.imag, a) for a, c in sorted(g.terms.items(), reverse=True))
                    for g in gens
                ),
            )
        )
    return IdealSpec(d, tuple(comps))


# ---------------------------------------------------------------------------
# polynomial expressions for command-line flags

_TERM = re.compile(r"^\s*([+-]?)\s*([^+-]+)")
_FACTOR = re.compile(r"^(z|w)(\d+)(?:\^(\d+))?$")


def parse_polynomial(text: str, d: int) -> list[HPoly]:
    """Parse ``"2*z1^2*z3 - w2 + 1j*z2*z3"`` into homogeneous parts (ascending degree).

    Factors are ``z<i>`` (coordinates) and ``w<i>`` (the diagonal-ideal
    generators), 1-based, with optional ``^e``.  Coefficients are Python
    complex literals.
    """
    s = text.replace(" ", "")
    if not s:
        raise SpecError("poly", "empty expression")
    pos = 0
    total: dict[int, HPoly] = {}
    ws = w_basis(d) if d >= 2 else []
    while pos < len(s):
        m = _TERM.match(s[pos:])
        if not m:
            raise SpecError("poly", f"cannot parse near {s[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        body = m.group(2)
        pos += m.end()
        # allow exponents in complex literals like 1e-3 by re-joining
        while pos < len(s) and body[-1:] in ("e", "E") and s[pos] in "+-":
            m2 = re.match(r"[+-][^+-]+", s[pos:])
            body += m2.group(0)
            pos += m2.end()
        coef: complex = sign
        term = HPoly.constant(d)
        for factor in body.split("*"):
            fm = _FACTOR.match(factor)
            if fm:
                kind, idx, exp = fm.group(1), int(fm.group(2)), int(fm.group(3) or 1)
                if not 1 <= idx <= d:
                    raise SpecError("poly", f"index {idx} out of range 1..{d} in {factor!r}")
                if kind == "w" and idx < 2:
                    raise SpecError("poly", "w indices start at 2 (w1 is not an ideal generator)")
                base = HPoly.coordinate(d, idx - 1) if kind == "z" else ws[idx - 1]
                term = term * base**exp
            else:
                try:
                    coef *= complex(factor)
                except ValueError:
                    raise SpecError("poly", f"bad factor {factor!r}") from None
        term = term.scale(coef)
        if term.is_zero():
            continue
        deg = term.degree
        total[deg] = total[deg] + term if deg in total else term
    return [total[k] for k in sorted(total) if not total[k].is_zero()]


def parse_complex_list(text: str) -> list[complex]:
    try:
        return [complex(t.strip()) for t in text.split(",")]
    except ValueError:
        raise SpecError("", f"cannot parse complex list {text!r}") from None


# ---------------------------------------------------------------------------
# run configuration


EXPERIMENTS = (
    "dims",
    "compress",
    "commutator",
    "trace-formula",
    "shift-coeffs",
    "zero-blocks",
    "module-map",
    "asym-orth",
    "nonnormal-demo",
    "boundary-witness",
    "spectrum-probe",
)


@dataclass
class RunConfig:
    D: int
    experiments: list[dict] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)
    out: str = "qml-out"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.D, int) or self.D < 3:
            raise SpecError("D", "truncation degree must be an integer >= 3")
        for k, exp in enumerate(self.experiments):
            name = exp.get("name") if isinstance(exp, dict) else None
            if name not in EXPERIMENTS:
                raise SpecError(f"experiments[{k}].name", f"unknown experiment {name!r}")


def parse_tolerances(text: str | None) -> dict[str, float]:
    """``"trace-formula=1e-5,zero-blocks=1e-8"`` -> dict."""
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise SpecError("tol", f"expected claim=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in EXPERIMENTS:
            raise SpecError("tol", f"unknown claim {k!r}")
        try:
            val = float(v)
        except ValueError:
            raise SpecError("tol", f"bad tolerance {v!r} for {k}") from None
        if not val > 0:
            raise SpecError("tol", f"tolerance for {k} must be positive")
        out[k] = val
    return out


def parse_run_config(document: str | dict) -> RunConfig:
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecError("", f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SpecError("", "top level must be an object")
    D = _require(document, "D", "", int)
    exps = document.get("experiments", [])
    if not isinstance(exps, list):
        raise SpecError("experiments", "expected a list")
    exps = [{"name": e} if isinstance(e, str) else e for e in exps]
    tols = document.get("tolerances", {})
    if not isinstance(tols, dict):
        raise SpecError("tolerances", "expected an object")
    tol_text = ",".join(f"{k}={v}" for k, v in tols.items())
    seed = document.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise SpecError("seed", "must be a non-negative integer")
    return RunConfig(D, exps, parse_tolerances(tol_text), document.get("out", "qml-out"), seed)
