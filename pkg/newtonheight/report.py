"""
Aggregated analysis reports and the verification summaries behind the command-line tool.

Exact quantities are serialized as ``"num/den"`` strings; floats are written as measured.
"""

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from newtonheight.adaptation import adapt_coordinates, check_adapted, height
from newtonheight.config import DEFAULTS, SCHEMA_VERSION
from newtonheight.errors import FitInconclusiveError
from newtonheight.invariants import augmented_polyhedron, critical_exponents, verify_cluster_identities
from newtonheight.newton import build_polyhedron, newton_distance, principal_face
from newtonheight.oscillatory import CutoffSpec, decay_fit, geometric_grid, uniform_decay_probe
from newtonheight.parser import parse_polynomial
from newtonheight.sublevel import iosevich_sawyer_check, knapp_sequence, sublevel_fit

logger = logging.getLogger(__name__)

DECAY_COLUMNS = ["lambda", "s1", "s2", "reI", "imI", "absI", "estErr"]
SUBLEVEL_COLUMNS = ["epsilon", "measure", "stderr"]
KNAPP_COLUMNS = ["epsilon", "supPhi"]
SHELL_COLUMNS = ["k", "term"]


def canonical_json(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def calculate_digest(payload):
    """SHA-256 of the canonical JSON of ``payload`` without its timestamp and digest."""
    content = {key: value for key, value in payload.items() if key not in ("timestamp", "digest")}
    return hashlib.sha256(canonical_json(content).encode()).hexdigest()


@dataclass
class AnalysisReport:
    expression: str
    polynomial: object
    polyhedron: object
    distance: object
    principal: object
    verdict: object
    adaptation: object
    heights: object
    invariants: object
    augmented: Optional[object]
    cluster_checks: tuple
    timestamp: Optional[str] = field(default=None)

    def to_dict(self):
        payload = {
            "schemaVersion": SCHEMA_VERSION,
            "input": self.expression,
            "polynomial": str(self.polynomial),
            "newtonPolyhedron": self.polyhedron.to_dict(),
            "distance": str(self.distance),
            "principalFace": {
                **self.principal.face.to_dict(),
                "principalWeight": self.principal.weight.to_list() if self.principal.weight else None,
                "swapped": self.principal.swapped,
            },
            "adaptedness": self.verdict.to_dict(),
            "adaptation": self.adaptation.to_dict(),
            "rootJet": self.adaptation.jet.to_list(),
            "adaptedPolynomial": str(self.adaptation.adapted_polynomial),
            "heightData": self.heights.to_dict(),
            "criticalExponents": self.invariants.to_dict(),
            "edgeInvariants": [e.to_dict() for e in self.invariants.edge_invariants],
            "rHeight": str(self.invariants.r_height) if self.invariants.r_height is not None else None,
            "augmentedPolyhedron": self.augmented.to_dict() if self.augmented else None,
            "singularityClass": self.invariants.to_dict()["singularityClass"],
            "clusterIdentityCheck": [check.to_dict() for check in self.cluster_checks],
        }
        payload["digest"] = calculate_digest(payload)
        if self.timestamp is not None:
            payload["timestamp"] = self.timestamp
        return payload

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def analyze(expression, config=None, timestamp=True):
    """
    Run the exact pipeline on a phase expression.

    :raises ParseError: On malformed input.
    :raises PreconditionError: If the phase has a constant or linear part.
    :raises PipelineError: On internal inconsistencies (irrational principal roots included).
    """
    config = config or DEFAULTS
    phi = parse_polynomial(expression, config["max_degree"])
    polyhedron = build_polyhedron(phi)
    adaptation = adapt_coordinates(phi, config["max_steps"], config["max_linear_steps"])
    invariants = critical_exponents(phi, adaptation, config["series_order"])
    report = AnalysisReport(
        expression=expression,
        polynomial=phi,
        polyhedron=polyhedron,
        distance=newton_distance(polyhedron),
        principal=principal_face(polyhedron),
        verdict=check_adapted(phi),
        adaptation=adaptation,
        heights=height(phi, adaptation),
        invariants=invariants,
        augmented=augmented_polyhedron(adaptation) if adaptation.jet else None,
        cluster_checks=tuple(verify_cluster_identities(adaptation)),
        timestamp=datetime.now(timezone.utc).isoformat() if timestamp else None,
    )
    logger.info(f"Analysis of '{expression}' finished: h={invariants.h}, nu={invariants.nu}")
    return report


@dataclass
class VerificationSummary:
    mode: str
    expression: str
    expected: dict
    observed: dict
    tolerance: Optional[float]
    passed: bool
    rows: list = field(default_factory=list, repr=False)
    columns: list = field(default_factory=list, repr=False)
    inconclusive: bool = False
    files: list = field(default_factory=list)

    def to_dict(self):
        return {
            "schemaVersion": SCHEMA_VERSION,
            "mode": self.mode,
            "input": self.expression,
            "expected": self.expected,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "inconclusive": self.inconclusive,
            "files": self.files,
        }

    def raise_if_inconclusive(self):
        if self.inconclusive:
            raise FitInconclusiveError(f"{self.mode} verification of '{self.expression}' is inconclusive", self)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as csv_file:
        writer = csv.DictWriter(csv_file, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row[key] for key in columns})
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def write_tables(summary, directory):
    """Write the CSV table of a summary into ``directory`` and record its path."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"{summary.mode}.csv")
    summary.files.append(write_csv(path, summary.columns, summary.rows))
    return summary.files


def _quadrature_options(config):
    return {
        "gauss_order": config["gauss_order"],
        "oversample": config["oversample"],
        "min_panels": config["min_panels"],
        "budget": config["budget"],
        "threads": config["threads"],
    }


def _sublevel_options(config):
    return {
        "budget": config["sublevel_budget"],
        "grid": config["sublevel_grid"],
        "refine": config["refine_factor"],
        "mc_samples": config["mc_samples"],
        "seed": config["seed"],
    }


def _epsilon_grid(config):
    low = round(math.log2(config["eps_min"]))
    high = round(math.log2(config["eps_max"]))
    return [2.0**k for k in range(low, high + 1)]


def verify_decay(report, config):
    h, nu = report.invariants.h, report.invariants.nu
    grid = geometric_grid(config["lambda_min"], config["lambda_max"])
    fit = decay_fit(
        report.polynomial, CutoffSpec(config["cutoff_radius"]), grid, log_power=nu, **_quadrature_options(config)
    )
    expected = float(-1 / h)
    tolerance = config["decay_tolerance"]
    passed = fit.within(expected, tolerance) and fit.detected_log_power == nu and not fit.inconclusive
    return VerificationSummary(
        "decay",
        report.expression,
        {"slope": str(-1 / h), "logPower": nu},
        fit.to_dict(),
        tolerance,
        passed,
        [result.to_row() for result in fit.evaluations],
        DECAY_COLUMNS,
        inconclusive=fit.inconclusive,
    )


def verify_uniform(report, config):
    """Worst case of the decay over seeded linear perturbations ``|s| <= s_radius``."""
    h, nu = report.invariants.h, report.invariants.nu
    grid = geometric_grid(config["lambda_min"], config["lambda_max"])
    fit = uniform_decay_probe(
        report.polynomial, CutoffSpec(config["cutoff_radius"]), grid,
        s_radius=config["s_radius"], s_samples=config["s_samples"], seed=config["seed"], log_power=nu,
        **_quadrature_options(config),
    )
    tolerance = config["decay_tolerance"]
    return VerificationSummary(
        "uniform",
        report.expression,
        {"slope": str(-1 / h), "logPower": nu},
        fit.to_dict(),
        tolerance,
        fit.within(float(-1 / h), tolerance) and not fit.inconclusive,
        [result.to_row() for result in fit.evaluations],
        DECAY_COLUMNS,
        inconclusive=fit.inconclusive,
    )


def verify_sublevel(report, config):
    h, nu = report.invariants.h, report.invariants.nu
    fit = sublevel_fit(report.polynomial, config["cutoff_radius"], _epsilon_grid(config), nu, **_sublevel_options(config))
    tolerance = config["sublevel_tolerance"]
    return VerificationSummary(
        "sublevel",
        report.expression,
        {"exponent": str(1 / h), "logPower": nu},
        fit.to_dict(),
        tolerance,
        fit.within(float(1 / h), tolerance),
        [estimate.to_row() for estimate in fit.evaluations],
        SUBLEVEL_COLUMNS,
    )


def verify_knapp(report, config, edge, eps_exponents):
    """Knapp boxes for ``eps = 2**-k``; passes when ``supPhi/eps`` does not grow as ``eps -> 0``."""
    eps_grid = [2.0 ** (-k) for k in eps_exponents]
    boxes, (c1, c2) = knapp_sequence(
        report.invariants, report.adaptation, edge, eps_grid,
        samples=config["knapp_samples"], unit_scale=config["knapp_unit_scale"],
    )
    growth = 0.0
    if len(boxes) > 1:
        growth = float(np.polyfit(-np.log([b.epsilon for b in boxes]), np.log([b.ratio for b in boxes]), 1)[0])
    tolerance = config["trend_tolerance"]
    return VerificationSummary(
        "knapp",
        report.expression,
        {"lowerBoundPcPrime": str(boxes[0].lower_bound_pc_prime), "restrictionPcPrime": str(report.invariants.restriction_pc_prime)},
        {"c1": c1, "c2": c2, "growth": growth, "boxes": [box.to_dict() for box in boxes]},
        tolerance,
        c1 > 0 and growth <= tolerance,
        [box.to_row() for box in boxes],
        KNAPP_COLUMNS,
    )


def verify_integrability(report, config, p):
    verdict = iosevich_sawyer_check(
        report.polynomial, config["cutoff_radius"], p, _epsilon_grid(config), h=report.invariants.h,
        trend_tolerance=config["trend_tolerance"], **_sublevel_options(config),
    )
    if verdict.boundary:
        passed, inconclusive = verdict.numeric_trend != "convergent", False
    else:
        inconclusive = verdict.numeric_trend == "inconclusive"
        passed = not inconclusive and (verdict.numeric_trend == "convergent") == verdict.predicted_convergent
    return VerificationSummary(
        "integrability",
        report.expression,
        {"convergent": verdict.predicted_convergent, "boundary": verdict.boundary, "h": str(report.invariants.h)},
        verdict.to_dict(),
        config["trend_tolerance"],
        passed,
        [{"k": k, "term": term} for k, term in verdict.shell_terms],
        SHELL_COLUMNS,
        inconclusive=inconclusive,
    )
