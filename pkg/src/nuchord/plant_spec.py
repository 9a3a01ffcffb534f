"""
Plant specification files.

A plant spec is a JSON document naming the algebra instance and the plant,
either as polynomial data or as an explicit coprime factorization with
delayed terms. Coefficients of template files may contain the placeholder
{a}, substituted per parameter value for sweeps.
"""

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .boundary_algebra import DelayTerm, Rational, StableElement
from .exceptions import AlgebraError, ConfigurationError, FactorizationError
from .factorization import CoprimeFactorization, Fraction
from .logging import get_logger
from .types import AlgebraInstance, Domain, InstanceKind

logger = get_logger({"component": "plant_spec"})

PLACEHOLDER_REGEX = re.compile(r"\{([^}]+)\}")
SUPPORTED_PLACEHOLDERS = {"a"}
# "{a}", "-{a}", "0.5*{a}", "-2*{a}"
TEMPLATE_COEFF_REGEX = re.compile(
    r"^\s*(?P<sign>[-+])?\s*(?:(?P<factor>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\s*\*\s*)?\{a\}\s*$"
)
PLANT_KINDS = ("rational", "cf")
BUNDLED_PACKAGE = "nuchord"
BUNDLED_DIR = "data"


@dataclass(frozen=True)
class PlantSpec:
    """
    A parsed plant specification with templates resolved.

    Attributes:
        instance_kind: Algebra instance named by the file
        plant: Resolved plant object ({"kind": ..., ...})
        origin: Where the spec came from (path or bundled name)
        parameter: Template parameter used, if any
    """
    instance_kind: InstanceKind
    plant: Dict[str, Any]
    origin: str
    parameter: Optional[float] = None

    @property
    def kind(self) -> str:
        return str(self.plant["kind"])

    @property
    def digest(self) -> str:
        canonical = json.dumps(
            {"instance": self.instance_kind.value, "plant": self.plant}, sort_keys=True
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def has_delays(self) -> bool:
        if self.kind != "cf":
            return False
        groups = [self.plant["n"], self.plant["d"]]
        if "bezout" in self.plant:
            groups += [self.plant["bezout"]["x"], self.plant["bezout"]["y"]]
        return any(term["delay"] > 0 for group in groups for term in group)

    def to_fraction(self, instance: AlgebraInstance) -> Fraction:
        """
        Build the plant for an algebra instance.

        Raises:
            ConfigurationError: Instance mismatch or data that is not a valid element
        """
        if instance.kind is not self.instance_kind:
            raise ConfigurationError(
                "plant spec belongs to a different instance",
                {"spec": self.instance_kind.value, "instance": instance.kind.value, "origin": self.origin},
            )
        try:
            if self.kind == "rational":
                return Fraction.rational(self.plant["num"], self.plant["den"])
            return Fraction.from_cf(self._factorization(instance))
        except (AlgebraError, FactorizationError) as error:
            raise ConfigurationError(
                f"invalid plant data: {error.message}",
                {"origin": self.origin, **error.details},
            )

    def _factorization(self, instance: AlgebraInstance) -> CoprimeFactorization:
        domain = instance.domain
        n = _element(self.plant["n"], domain)
        d = _element(self.plant["d"], domain)
        x = y = None
        if "bezout" in self.plant:
            x = _element(self.plant["bezout"]["x"], domain)
            y = _element(self.plant["bezout"]["y"], domain)
        return CoprimeFactorization(n, d, instance, x, y)


def _element(terms: Sequence[Dict[str, Any]], domain: Domain) -> StableElement:
    return StableElement(
        domain,
        tuple(
            DelayTerm(Rational(np.asarray(t["num"], dtype=float), np.asarray(t["den"], dtype=float)), t["delay"])
            for t in terms
        ),
    )


def resolve_coefficient(value: Any, parameter: Optional[float], where: str) -> float:
    """
    Turn a coefficient entry into a number, substituting {a} when present.

    Raises:
        ConfigurationError: Unsupported placeholder, malformed template or
            template without a parameter value
    """
    if isinstance(value, bool):
        raise ConfigurationError(f"{where}: coefficients must be numbers", {"value": value})
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigurationError(f"{where}: coefficients must be numbers or template strings", {"value": value})

    placeholders = set(PLACEHOLDER_REGEX.findall(value))
    if not placeholders:
        try:
            return float(value)
        except ValueError:
            raise ConfigurationError(f"{where}: not a number", {"value": value})

    unsupported = placeholders - SUPPORTED_PLACEHOLDERS
    if unsupported:
        raise ConfigurationError(
            f"{where}: template contains unsupported placeholders: {', '.join(sorted(unsupported))}. "
            f"Only {', '.join(sorted(SUPPORTED_PLACEHOLDERS))} is supported.",
            {"value": value},
        )
    match = TEMPLATE_COEFF_REGEX.match(value)
    if not match:
        raise ConfigurationError(f"{where}: malformed template coefficient", {"value": value})
    if parameter is None:
        raise ConfigurationError(f"{where}: template needs a parameter value", {"value": value})
    factor = float(match.group("factor") or 1.0)
    sign = -1.0 if match.group("sign") == "-" else 1.0
    return sign * factor * parameter


def _coefficients(value: Any, parameter: Optional[float], where: str) -> List[float]:
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"{where}: expected a non-empty coefficient list", {"value": value})
    return [resolve_coefficient(v, parameter, f"{where}[{i}]") for i, v in enumerate(value)]


def _terms(value: Any, parameter: Optional[float], where: str) -> List[Dict[str, Any]]:
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"{where}: expected a non-empty list of terms")
    terms = []
    for i, term in enumerate(value):
        label = f"{where}[{i}]"
        if not isinstance(term, dict) or "num" not in term:
            raise ConfigurationError(f"{label}: a term needs at least 'num'", {"term": term})
        unknown = set(term) - {"num", "den", "delay"}
        if unknown:
            raise ConfigurationError(f"{label}: unknown keys {sorted(unknown)}")
        delay = resolve_coefficient(term.get("delay", 0.0), parameter, f"{label}.delay")
        if delay < 0:
            raise ConfigurationError(f"{label}: delays must be nonnegative", {"delay": delay})
        terms.append(
            {
                "num": _coefficients(term["num"], parameter, f"{label}.num"),
                "den": _coefficients(term.get("den", [1.0]), parameter, f"{label}.den"),
                "delay": delay,
            }
        )
    return terms


def parse_plant_spec(
    data: Any,
    origin: str = "<memory>",
    parameter: Optional[float] = None,
    default_instance: Optional[InstanceKind] = None,
) -> PlantSpec:
    """
    Validate a decoded plant spec document.

    Args:
        data: Decoded JSON object
        origin: Description used in error messages
        parameter: Value substituted for {a}
        default_instance: Instance used when the document names none

    Raises:
        ConfigurationError: Schema violation
    """
    if not isinstance(data, dict):
        raise ConfigurationError("plant spec must be a JSON object", {"origin": origin})

    raw_instance = data.get("instance")
    if raw_instance is None:
        if default_instance is None:
            raise ConfigurationError("plant spec does not name an instance", {"origin": origin})
        instance_kind = default_instance
    else:
        try:
            instance_kind = InstanceKind(raw_instance)
        except ValueError:
            raise ConfigurationError(
                f"unknown instance '{raw_instance}'",
                {"origin": origin, "supported": [k.value for k in InstanceKind]},
            )
        if default_instance is not None and default_instance is not instance_kind:
            raise ConfigurationError(
                "plant spec instance differs from the requested instance",
                {"origin": origin, "spec": instance_kind.value, "requested": default_instance.value},
            )

    plant = data.get("plant")
    if not isinstance(plant, dict) or plant.get("kind") not in PLANT_KINDS:
        raise ConfigurationError("'plant' must be an object with kind 'rational' or 'cf'", {"origin": origin})

    if plant["kind"] == "rational":
        if "delays" in plant or "delay" in plant:
            raise ConfigurationError("plants with delays must be given as kind 'cf'", {"origin": origin})
        resolved: Dict[str, Any] = {
            "kind": "rational",
            "num": _coefficients(plant.get("num"), parameter, "plant.num"),
            "den": _coefficients(plant.get("den", [1.0]), parameter, "plant.den"),
        }
        if not any(resolved["den"]):
            raise ConfigurationError("plant denominator must be nonzero", {"origin": origin})
    else:
        resolved = {
            "kind": "cf",
            "n": _terms(plant.get("n"), parameter, "plant.n"),
            "d": _terms(plant.get("d"), parameter, "plant.d"),
        }
        bezout = plant.get("bezout")
        if bezout is not None:
            if not isinstance(bezout, dict) or set(bezout) != {"x", "y"}:
                raise ConfigurationError("'bezout' must hold exactly 'x' and 'y'", {"origin": origin})
            resolved["bezout"] = {
                "x": _terms(bezout["x"], parameter, "plant.bezout.x"),
                "y": _terms(bezout["y"], parameter, "plant.bezout.y"),
            }

    spec = PlantSpec(instance_kind, resolved, origin, parameter)
    if spec.has_delays and instance_kind is not InstanceKind.HALFPLANE_C0AP:
        raise ConfigurationError(
            "delays are only allowed for the halfplane_c0ap instance",
            {"origin": origin, "instance": instance_kind.value},
        )
    return spec


def is_template(data: Any) -> bool:
    """Whether any string in the document contains a placeholder."""
    if isinstance(data, dict):
        return any(is_template(v) for v in data.values())
    if isinstance(data, list):
        return any(is_template(v) for v in data)
    return isinstance(data, str) and bool(PLACEHOLDER_REGEX.search(data))


def read_spec_document(source: Union[str, Path]) -> Any:
    """Read and decode a spec file (raises ConfigurationError)."""
    path = Path(source)
    if not path.exists():
        raise ConfigurationError(f"Plant spec file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise ConfigurationError(f"Invalid JSON in {path}: {error}")
    except OSError as error:
        raise ConfigurationError(f"Error reading plant spec {path}: {error}")


def document_digest(source: Union[str, Path]) -> str:
    """sha256 of a spec document in canonical form (templates unresolved)."""
    canonical = json.dumps(read_spec_document(source), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_plant_spec(
    source: Union[str, Path],
    parameter: Optional[float] = None,
    default_instance: Optional[InstanceKind] = None,
) -> PlantSpec:
    """Load a plant spec file."""
    data = read_spec_document(source)
    spec = parse_plant_spec(data, str(source), parameter, default_instance)
    logger.debug("Plant spec loaded", origin=str(source), kind=spec.kind, instance=spec.instance_kind.value)
    return spec


def bundled_spec_names() -> List[str]:
    folder = resources.files(BUNDLED_PACKAGE).joinpath(BUNDLED_DIR)
    return sorted(entry.name for entry in folder.iterdir() if entry.name.endswith(".json"))


def read_bundled_document(name: str) -> Any:
    entry = resources.files(BUNDLED_PACKAGE).joinpath(BUNDLED_DIR, name)
    if not entry.is_file():
        raise ConfigurationError(f"No bundled plant spec named {name}", {"available": bundled_spec_names()})
    return json.loads(entry.read_text(encoding="utf-8"))


def load_bundled_spec(name: str, parameter: Optional[float] = None) -> PlantSpec:
    """Load one of the example specs shipped with the package."""
    return parse_plant_spec(read_bundled_document(name), f"bundled:{name}", parameter)


def ensure_same_instance(*specs: PlantSpec) -> InstanceKind:
    """
    The common instance of several specs.

    Raises:
        ConfigurationError: The specs name different instances
    """
    kinds = {spec.instance_kind for spec in specs}
    if len(kinds) != 1:
        raise ConfigurationError(
            "plant specs belong to different instances",
            {spec.origin: spec.instance_kind.value for spec in specs},
        )
    return specs[0].instance_kind
