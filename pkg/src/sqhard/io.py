"""Instance files: JSON with every number stored as an exact string."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .junta import IsingInstance, JuntaInstance, ProductInstance
from .scalar import EXACT_ARITH, Arith, format_scalar, parse_scalar
from .sqharness import SubsetFamily
from .univariate import MOMENT_MATCHED, UnivariateDist, custom

FORMAT_VERSION = 1
KINDS = ("univariate", "junta", "product", "ising", "family")


class FormatError(ValueError):
    pass


@dataclass
class InstanceFile:
    kind: str
    mode: str = "exact"
    precision_bits: Optional[int] = None
    parameters: Dict[str, str] = field(default_factory=dict)
    pmf: List[str] = field(default_factory=list)
    S: List[int] = field(default_factory=list)
    subsets: List[List[int]] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def arith(self) -> Arith:
        if self.mode == "exact":
            return EXACT_ARITH
        return Arith("float", self.precision_bits or 256)


def serialize(inst: InstanceFile) -> str:
    return json.dumps(asdict(inst), indent=2, sort_keys=True) + "\n"


def parse(text: str) -> InstanceFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"not JSON: {e}") from e
    if not isinstance(raw, dict):
        raise FormatError("top level must be an object")
    if raw.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {raw.get('format_version')!r}")
    if raw.get("kind") not in KINDS:
        raise FormatError(f"unknown kind {raw.get('kind')!r}")
    if raw.get("mode", "exact") not in ("exact", "float"):
        raise FormatError(f"unknown mode {raw.get('mode')!r}")
    known = set(InstanceFile.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise FormatError(f"unexpected fields {sorted(extra)}")
    inst = InstanceFile(**raw)
    if inst.mode == "float" and not isinstance(inst.precision_bits, int):
        raise FormatError("float-mode files need an integer precision_bits")
    if not all(isinstance(v, str) for v in inst.parameters.values()):
        raise FormatError("parameters must be strings")
    if not all(isinstance(v, str) for v in inst.pmf):
        raise FormatError("pmf entries must be strings")
    return inst


def read_instance(path: str) -> InstanceFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def write_instance(inst: InstanceFile, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(inst))


# -- conversions -----------------------------------------------------------------


def _mode_fields(arith: Arith) -> Dict[str, Any]:
    return {"mode": arith.mode, "precision_bits": None if arith.exact else arith.bits}


def _provenance(seed: Optional[int], config: Dict[str, Any]) -> Dict[str, Any]:
    return {"tool": f"sqhard {__version__}", "seed": seed, "config": config}


def param_str(x, arith: Arith) -> str:
    if isinstance(x, (int, str)):
        return str(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return format_scalar(x, arith)


def from_univariate(A: UnivariateDist, params: Dict[str, Any], seed=None, config=None,
                    kind: str = "univariate", S: Sequence[int] = ()) -> InstanceFile:
    a = A.arith
    return InstanceFile(kind=kind, parameters={k: param_str(v, a) for k, v in params.items()},
                        pmf=[format_scalar(v, a) for v in A.pmf], S=list(S),
                        provenance=_provenance(seed, config or {}), **_mode_fields(a))


def from_family(fam: SubsetFamily, seed=None, config=None) -> InstanceFile:
    params = {"M": str(fam.M), "m": str(fam.m), "c": param_str(fam.c, EXACT_ARITH)}
    if fam.diagnostic:
        params["diagnostic"] = fam.diagnostic
    return InstanceFile(kind="family", parameters=params, subsets=[list(s) for s in fam.subsets],
                        provenance=_provenance(seed, config or {}))


def from_product(inst: ProductInstance, seed=None, config=None) -> InstanceFile:
    return InstanceFile(kind="product", parameters={"M": str(inst.M), "eps": param_str(inst.eps, inst.arith)},
                        S=list(inst.S), provenance=_provenance(seed, config or {}), **_mode_fields(inst.arith))


def from_ising(inst: IsingInstance, eta, seed=None, config=None) -> InstanceFile:
    a = inst.arith
    return InstanceFile(kind="ising", parameters={"M": str(inst.M), "coupling": param_str(inst.coupling, a),
                                                  "eta": param_str(eta, a)},
                        S=list(inst.S), provenance=_provenance(seed, config or {}), **_mode_fields(a))


def _int(inst: InstanceFile, key: str) -> int:
    try:
        return int(inst.parameters[key])
    except (KeyError, ValueError) as e:
        raise FormatError(f"parameter {key!r} missing or not an integer") from e


def _scalar(inst: InstanceFile, key: str, arith: Optional[Arith] = None):
    arith = arith or inst.arith
    try:
        return parse_scalar(inst.parameters[key], arith)
    except (KeyError, ValueError, ZeroDivisionError) as e:
        raise FormatError(f"parameter {key!r} missing or malformed") from e


def to_univariate(inst: InstanceFile) -> UnivariateDist:
    if not inst.pmf:
        raise FormatError(f"{inst.kind} file carries no pmf")
    a = inst.arith
    try:
        pmf = [parse_scalar(v, a) for v in inst.pmf]
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"malformed pmf entry: {e}") from e
    params = dict(inst.parameters)
    return custom(pmf, a, kind=MOMENT_MATCHED if "k" in params else "custom", **params)


def to_junta(inst: InstanceFile) -> JuntaInstance:
    try:
        return JuntaInstance(to_univariate(inst), tuple(inst.S), _int(inst, "M"))
    except (ValueError, TypeError) as e:
        raise FormatError(str(e)) from e


def to_product(inst: InstanceFile) -> ProductInstance:
    try:
        return ProductInstance(_int(inst, "M"), tuple(inst.S), _scalar(inst, "eps"), inst.arith)
    except (ValueError, TypeError) as e:
        raise FormatError(str(e)) from e


def to_ising(inst: InstanceFile) -> IsingInstance:
    a = inst.arith.float_ctx()
    try:
        return IsingInstance(_int(inst, "M"), tuple(inst.S), _scalar(inst, "coupling", a), _scalar(inst, "eta", a), a)
    except (ValueError, TypeError) as e:
        raise FormatError(str(e)) from e


def to_family(inst: InstanceFile) -> SubsetFamily:
    try:
        c = Fraction(inst.parameters["c"])
    except (KeyError, ValueError) as e:
        raise FormatError("parameter 'c' missing or malformed") from e
    return SubsetFamily(_int(inst, "M"), _int(inst, "m"), c, [tuple(s) for s in inst.subsets],
                        inst.parameters.get("diagnostic", ""))
