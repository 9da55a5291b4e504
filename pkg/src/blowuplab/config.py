"""INI-style run configuration with environment overrides."""
from __future__ import annotations

import configparser
import hashlib
import os
from pathlib import Path

from .errors import ConfigError

ENV_PREFIX = "BLOWUPLAB_"

DEFAULTS = {
    "run": {"tol": "1e-8", "rtol": "1e-9", "seed": "0", "jobs": "0"},
    "sections": {"rho": "0.25", "delta": "", "beta": "0.5", "nu": "1.0", "Cu": "1.0", "Cv": "1.0", "omega": "",
                 "entry_perturbation": "1e-3"},
    "coeffs": {"k0_list": "1, 2, 3, 8", "mu_list": "0, 0.5, 2", "c_list": "-0.1, -0.5", "a_list": "0.5, 1",
               "a1_star_list": "0, 0.2"},
    "passage": {"mu": "0.5", "a": "1.0", "eps": "1e-4", "k0": "8"},
    "sweep": {"mu_list": "0.5, 2", "eps_list": "1e-3, 1e-4, 1e-5", "k0_list": "4, 8, 16", "a": "1.0"},
    "converge": {"k0_list": "2, 4, 8, 16, 32", "kref": "64", "c": "-0.5", "mu": "0.5", "a": "1.0", "n_samples": "64",
                 "vmax": "0.1", "eps_max": "0.01"},
    "pdecheck": {"k1_k0_list": "2, 4, 8, 12", "n_points": "5", "mu": "0.7", "a": "1.0", "eps_list": "1e-2, 1e-3, 1e-4",
                 "k2_k0": "8", "eta": "0.3", "U0": "-1.0", "V0": "-1.0", "T": "1.0", "zero_tol": "1e-9"},
}


class RunConfig:
    """Parsed configuration; every value is stored as text until requested."""

    def __init__(self, parser: configparser.ConfigParser):
        self._p = parser

    def get(self, section, key):
        try:
            return self._p.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError) as exc:
            raise ConfigError(f"missing config value [{section}] {key}") from exc

    def float(self, section, key):
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc

    def optional_float(self, section, key):
        raw = self.get(section, key).strip()
        return None if raw == "" else self.float(section, key)

    def int(self, section, key):
        v = self.float(section, key)
        if v != int(v):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(v)

    def floats(self, section, key):
        raw = self.get(section, key)
        try:
            return [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number list") from exc

    def ints(self, section, key):
        vals = self.floats(section, key)
        if any(v != int(v) for v in vals):
            raise ConfigError(f"[{section}] {key} must hold integers")
        return [int(v) for v in vals]

    def set(self, section, key, value):
        if not self._p.has_section(section):
            self._p.add_section(section)
        self._p.set(section, key, str(value))

    def canonical(self):
        lines = []
        for s in sorted(self._p.sections()):
            lines.append(f"[{s}]")
            for k in sorted(self._p.options(s)):
                lines.append(f"{k}={self._p.get(s, k).strip()}")
        return "\n".join(lines)

    @property
    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def section_params(self):
        from .flow.passage import SectionParams

        return SectionParams(
            rho=self.float("sections", "rho"), delta=self.optional_float("sections", "delta"),
            beta=self.float("sections", "beta"), nu=self.float("sections", "nu"), Cu=self.float("sections", "cu"),
            Cv=self.float("sections", "cv"), omega=self.optional_float("sections", "omega"),
            entry_perturbation=self.float("sections", "entry_perturbation"),
        )


def load_config(path=None, env=None):
    """Defaults, then the file at ``path``, then BLOWUPLAB_<SECTION>_<KEY> variables."""
    p = configparser.ConfigParser()
    p.read_dict(DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            p.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    env = os.environ if env is None else env
    for name, value in sorted(env.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if not key or section not in p.sections():
            raise ConfigError(f"environment override {name} does not name a known section")
        p.set(section, key, value)
    return RunConfig(p)
