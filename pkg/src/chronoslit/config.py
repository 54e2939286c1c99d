"""Run configuration files.

Grammar: ``[section]`` headers followed by ``key = value`` lines.  ``#`` starts
a comment (whole-line or trailing).  Keys are case-sensitive; unknown
sections and keys, duplicate keys and unparsable values are rejected with
the offending line number.  Sections:

``[experiment]``
    wavelength, v_group, v_phase, slit_separation, screen_distance,
    extra_long_path (metres, or ``tuned`` for ``v_group * delta_T``),
    delta_T, pulse_sigma, t1, hbar (optional).
``[screen]``
    lo, hi, n: the transverse screen grid in metres (non-periodic).
``[emission]``
    model (``coherent``, ``single:A``, ``single:B`` or ``incoherent``),
    weight_a (``|cA|^2`` or ``pA``, default 0.5), relative_phase (radians,
    ``arg(cA conj(cB))``, default 0).
``[constraint]``
    hamiltonian (``free`` or ``harmonic``), mass, omega (harmonic only),
    hbar, q_lo, q_hi, q_n, t_lo, t_hi, t_n, packet_center, packet_width,
    packet_wavenumber.

Shipped presets (``photon_tuned``, ``electron_tuned``, ``free_packet``,
``harmonic_packet``) can be named instead of a path.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .constraint import Hamiltonian, gaussian_packet, hamiltonian_free, hamiltonian_harmonic
from .errors import ConfigurationError
from .experiment import EmissionModel, ExperimentConfig
from .grids import HBAR, GridSpec, StateVector, make_grid

REQUIRED = object()

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "experiment": {
        "wavelength": ("float", REQUIRED),
        "v_group": ("float", REQUIRED),
        "v_phase": ("float", REQUIRED),
        "slit_separation": ("float", REQUIRED),
        "screen_distance": ("float", REQUIRED),
        "extra_long_path": ("length_or_tuned", REQUIRED),
        "delta_T": ("float", REQUIRED),
        "pulse_sigma": ("float", REQUIRED),
        "t1": ("float", 0.0),
        "hbar": ("float", HBAR),
    },
    "screen": {
        "lo": ("float", REQUIRED),
        "hi": ("float", REQUIRED),
        "n": ("int", REQUIRED),
    },
    "emission": {
        "model": ("emission", "coherent"),
        "weight_a": ("float", 0.5),
        "relative_phase": ("float", 0.0),
    },
    "constraint": {
        "hamiltonian": ("hamiltonian", REQUIRED),
        "mass": ("float", 1.0),
        "omega": ("float", 1.0),
        "hbar": ("float", 1.0),
        "q_lo": ("float", REQUIRED),
        "q_hi": ("float", REQUIRED),
        "q_n": ("int", REQUIRED),
        "t_lo": ("float", 0.0),
        "t_hi": ("float", REQUIRED),
        "t_n": ("int", REQUIRED),
        "packet_center": ("float", 0.0),
        "packet_width": ("float", 1.0),
        "packet_wavenumber": ("float", 0.0),
    },
}

EMISSION_CHOICES = ("coherent", "single:A", "single:B", "incoherent")
PRESETS = ("photon_tuned", "electron_tuned", "free_packet", "harmonic_packet")


@dataclass(frozen=True)
class ConstraintConfig:
    hamiltonian: str
    mass: float
    omega: float
    hbar: float
    grid_q: GridSpec
    grid_t: GridSpec
    packet_center: float
    packet_width: float
    packet_wavenumber: float

    def build(self) -> tuple[Hamiltonian, GridSpec, StateVector]:
        if self.hamiltonian == "free":
            H = hamiltonian_free(self.grid_q, self.mass, self.hbar)
        else:
            H = hamiltonian_harmonic(self.grid_q, self.mass, self.omega, self.hbar)
        psi0 = gaussian_packet(self.grid_q, self.packet_center, self.packet_width,
                               self.packet_wavenumber)
        return H, self.grid_t, psi0


@dataclass(frozen=True)
class RunConfig:
    """Everything a config file may define, plus the resolved values it was built from."""

    experiment: ExperimentConfig | None
    emission: EmissionModel
    constraint: ConstraintConfig | None
    echo: dict
    source: str


def parse_emission(model: str, weight_a: float = 0.5,
                       relative_phase: float = 0.0) -> EmissionModel:
    if model == "coherent":
        return EmissionModel.coherent_split(weight_a, relative_phase)
    if model in ("single:A", "single:B"):
        return EmissionModel.single(model[-1])
    if model == "incoherent":
        if not 0.0 <= weight_a <= 1.0:
            raise ConfigurationError(f"weight_a must lie in [0, 1], got {weight_a!r}")
        return EmissionModel.incoherent(weight_a, 1.0 - weight_a)
    raise ConfigurationError(f"unknown emission model {model!r}; choose from "
                             + ", ".join(EMISSION_CHOICES))


def preset_path(name: str) -> Path:
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem not in PRESETS:
        raise ConfigurationError(f"no preset named {name!r}")
    return Path(str(resources.files("chronoslit") / "presets" / f"{stem}.cfg"))


def resolve_path(path) -> Path:
    """A readable file path, falling back to the shipped presets by name."""
    p = Path(path)
    if p.is_file():
        return p
    stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
    if stem in PRESETS and p.parent == Path("."):
        return preset_path(stem)
    raise ConfigurationError(f"config file not found: {path}")


def _line_of(lines: list[str], section: str, key: str | None = None) -> int:
    current = None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[(.+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and "=" in line:
            if line.split("=", 1)[0].strip() == key:
                return no
    return 0


def _convert(kind: str, raw: str, section: str, key: str, lineno: int):
    where = f"line {lineno}: [{section}] {key}"
    try:
        if kind == "float":
            value = float(raw)
        elif kind == "int":
            value = int(raw)
        elif kind == "length_or_tuned":
            value = "tuned" if raw == "tuned" else float(raw)
        elif kind == "emission":
            if raw not in EMISSION_CHOICES:
                raise ValueError(f"expected one of {', '.join(EMISSION_CHOICES)}")
            value = raw
        elif kind == "hamiltonian":
            if raw not in ("free", "harmonic"):
                raise ValueError("expected 'free' or 'harmonic'")
            value = raw
        else:  # pragma: no cover
            raise AssertionError(kind)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: cannot parse {raw!r} ({exc})") from None
    return value


def parse_text(text: str, source: str = "<string>") -> RunConfig:
    """Parse config text; see the module docstring for the grammar."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",),
        strict=True, default_section="__none__", empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigurationError(
            f"{source}: line {exc.lineno}: key outside any [section]") from None
    except configparser.ParsingError as exc:
        linenos = ", ".join(str(no) for no, _ in exc.errors)
        raise ConfigurationError(f"{source}: parse error on line {linenos}") from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigurationError(f"{source}: line {exc.lineno}: {exc.message}") from None
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None

    lines = text.splitlines()
    echo: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(
                f"{source}: line {_line_of(lines, section)}: unknown section [{section}]"
            )
        schema = SCHEMA[section]
        values = {}
        for key, raw in parser.items(section):
            lineno = _line_of(lines, section, key)
            if key not in schema:
                raise ConfigurationError(
                    f"{source}: line {lineno}: unknown key {key!r} in [{section}]"
                )
            values[key] = _convert(schema[key][0], raw.strip(), section, key, lineno)
        for key, (_, default) in schema.items():
            if key not in values:
                if default is REQUIRED:
                    raise ConfigurationError(
                        f"{source}: [{section}] is missing required key {key!r}"
                    )
                values[key] = default
        echo[section] = values

    try:
        return _build(echo, source)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None


def _build(echo: dict, source: str) -> RunConfig:
    experiment = None
    if "experiment" in echo or "screen" in echo:
        if "experiment" not in echo or "screen" not in echo:
            raise ConfigurationError("[experiment] and [screen] must be given together")
        ex = dict(echo["experiment"])
        sc = echo["screen"]
        if ex["extra_long_path"] == "tuned":
            ex["extra_long_path"] = ex["v_group"] * ex["delta_T"]
            echo["experiment"]["extra_long_path"] = ex["extra_long_path"]
        screen = make_grid(sc["lo"], sc["hi"], sc["n"], periodic=False)
        experiment = ExperimentConfig(screen=screen, **ex)

    em = echo.setdefault("emission", {k: d for k, (_, d) in SCHEMA["emission"].items()})
    emission = parse_emission(em["model"], em["weight_a"], em["relative_phase"])

    constraint = None
    if "constraint" in echo:
        c = echo["constraint"]
        constraint = ConstraintConfig(
            hamiltonian=c["hamiltonian"], mass=c["mass"], omega=c["omega"], hbar=c["hbar"],
            grid_q=make_grid(c["q_lo"], c["q_hi"], c["q_n"], periodic=True),
            grid_t=make_grid(c["t_lo"], c["t_hi"], c["t_n"], periodic=True),
            packet_center=c["packet_center"], packet_width=c["packet_width"],
            packet_wavenumber=c["packet_wavenumber"],
        )
        # validates mass/omega/grid width eagerly
        constraint.build()
    return RunConfig(experiment, emission, constraint, echo, source)


def parse_config(path) -> RunConfig:
    """Load and validate a config file (or a preset by name)."""
    p = resolve_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_text(text, source=str(p))


def format_config(echo: dict) -> str:
    """Render resolved values back into config syntax (round-trips through ``parse_text``)."""
    out = []
    for section, values in echo.items():
        out.append(f"[{section}]")
        for key, value in values.items():
            out.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
        out.append("")
    return "\n".join(out)

