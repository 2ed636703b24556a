"""Scenario files in INI syntax.

``[DEFAULT]`` holds shared keys; each ``[scenario:NAME]`` section is one
scenario and inherits from it. Keys (all optional unless noted):

============  ===============================================================
p             feature count (10000)
signals       ``n1,n2,n11``: signal totals per study and shared count; or
p10/p01/p11   direct counts; or
pi10/pi01/pi11  proportions of ``p``
model         ``t4`` | ``berk-jones`` | ``normal``
mean, sd      law of the nonzero effects (model default if absent)
rho           AR(1) correlation of the Berk-Jones Z-scores (0.5)
block         Z-scores per feature (50); ``nonzero`` shifted components (25)
alpha         target level (0.05)
replications  number of replications (200)
seed          master seed (1)
m             search depth per study (5000; ``all`` for no limit)
methods       comma list from proposed-max, proposed-min, powerful-max,
              powerful-min, max-p
bj_null_B     Monte-Carlo size of the Berk-Jones null table (10000)
============  ===============================================================
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .scenarios import ScenarioConfig

_INT = ("p", "p10", "p01", "p11", "block", "nonzero", "replications", "seed", "bj_null_B")
_FLOAT = ("rho", "alpha")
_KNOWN = set(_INT) | set(_FLOAT) | {
    "m", "signals", "pi10", "pi01", "pi11", "model", "mean", "sd", "methods",
}


def _section_config(name: str, sec) -> ScenarioConfig:
    unknown = set(sec.keys()) - _KNOWN
    if unknown:
        raise ValueError(f"scenario {name!r}: unknown keys {sorted(unknown)}")
    kw = {"name": name}
    for k in _INT:
        if k in sec:
            kw[k] = sec.getint(k)
    for k in _FLOAT:
        if k in sec:
            kw[k] = sec.getfloat(k)
    if "model" in sec:
        kw["signal_model"] = sec["model"].strip()
    if "mean" in sec:
        kw["signal_mean"] = sec.getfloat("mean")
    if "sd" in sec:
        kw["signal_sd"] = sec.getfloat("sd")
    if "methods" in sec:
        kw["methods"] = tuple(x.strip() for x in sec["methods"].split(",") if x.strip())
    if "m" in sec:
        raw = sec["m"].strip().lower()
        kw["m"] = None if raw in ("", "none", "all") else int(raw)
    p = kw.get("p", ScenarioConfig.p)
    if "signals" in sec:
        n1, n2, n11 = (int(x) for x in sec["signals"].split(","))
        return ScenarioConfig.signal_counts(n1, n2, n11, **kw)
    if any(k in sec for k in ("pi10", "pi01", "pi11")):
        kw.pop("p", None)
        return ScenarioConfig.from_proportions(
            p, sec.getfloat("pi10", 0.0), sec.getfloat("pi01", 0.0), sec.getfloat("pi11", 0.0), **kw
        )
    return ScenarioConfig(**kw)


def parse_scenarios(text: str) -> list[ScenarioConfig]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    out = []
    for section in cp.sections():
        if not section.startswith("scenario:"):
            raise ValueError(f"unexpected section [{section}]; use [scenario:NAME]")
        name = section.split(":", 1)[1].strip()
        out.append(_section_config(name, cp[section]))
    if not out:
        raise ValueError("no [scenario:NAME] sections found")
    return out


def load_scenarios(path) -> list[ScenarioConfig]:
    return parse_scenarios(Path(path).read_text())
