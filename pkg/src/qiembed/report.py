"""QieReport documents: schema-versioned, deterministic JSON plus plot-ready CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__

SCHEMA_VERSION = "qie-report/1"


def load_schema() -> dict:
    return json.loads(resources.files("qiembed").joinpath("schema/qie_report.schema.json").read_text())


def jsonable(x):
    """Plain JSON value: tuples become lists, fractions "n/d" strings, non-finite floats null."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, complex):
        return [jsonable(x.real), jsonable(x.imag)]
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialize {type(x).__name__}")


@dataclass
class CheckRecord:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "status": "pass" if self.passed else "fail",
                "measured": jsonable(self.measured), "tolerances": jsonable(self.tolerances)}


@dataclass
class QieReport:
    verb: str
    seed: int | None
    budgets: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    fitted_constants: dict | None = None
    inputs: dict = field(default_factory=dict)
    csv_tables: dict = field(default_factory=dict)  # file stem -> (header, rows)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failing(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "artifact_version": __version__,
            "verb": self.verb,
            "config": {"seed": self.seed, "budgets": jsonable(self.budgets), "inputs": jsonable(self.inputs)},
            "status": "pass" if self.passed else "fail",
            "checks": [c.to_dict() for c in self.checks],
            "results": jsonable(self.results),
        }
        if self.fitted_constants is not None:
            out["fitted_constants"] = jsonable(self.fitted_constants)
        return out

    def dumps(self) -> str:
        doc = self.to_dict()
        jsonschema.validate(doc, load_schema())
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, out_dir: Path, stem: str) -> list:
        """Write ``stem.json`` and one CSV per table; returns the written paths."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{stem}.json"
        path.write_text(self.dumps())
        paths = [path]
        for name, (header, rows) in sorted(self.csv_tables.items()):
            p = out_dir / f"{stem}_{name}.csv"
            p.write_text(csv_text(header, rows))
            paths.append(p)
        return paths


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()
