"""Run reports: metrics, per-stage timings, config echo, artifact hashes.

Every command emits the same report twice: a fixed-width human-readable
table on stdout and a machine-readable JSON file for scripted checks.
Everything in the JSON except the wall-clock timing fields is a pure
function of (config, seed, input files).
"""

import hashlib
import json
import os

TIMING_ORDER = (
    "parse", "fit_rd", "fit_pca", "fit_dca", "fit_bcd", "fit_abd",
    "fit_decomposition", "local_training", "fusion", "prediction",
    "baseline", "persist", "total",
)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_report(command, seed, timings, config_echo=None, metrics=None,
                 artifacts=None, extra=None):
    """Assemble the report record for one command run."""
    report = {
        "command": command,
        "seed": seed,
        "timings_s": {k: float(v) for k, v in timings.items()},
        "config": config_echo or {},
        "metrics": metrics,
        "artifacts": {},
    }
    for name, path in (artifacts or {}).items():
        report["artifacts"][name] = {"path": path, "sha256": sha256_file(path)}
    if extra:
        report.update(extra)
    return report


def write_report(report, out_dir, name):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return path


def _row(label, value, width=58):
    return f"| {label:<34}| {value:>{width - 38}} |"


def _rule(width=58):
    return "+" + "-" * width + "+"


def format_report(report):
    """Fixed-width table: stage timings, then metrics."""
    width = 58
    lines = [_rule(width),
             _row(f"command: {report['command']}", f"seed {report['seed']}",
                  width),
             _rule(width)]
    timings = report.get("timings_s", {})
    ordered = [k for k in TIMING_ORDER if k in timings]
    ordered += [k for k in sorted(timings) if k not in TIMING_ORDER]
    for key in ordered:
        lines.append(_row(f"time {key} (s)", f"{timings[key]:.3f}", width))
    metrics = report.get("metrics")
    if metrics:
        lines.append(_rule(width))
        if "error_rate_pct" in metrics:
            lines.append(_row("error rate (%)",
                              f"{metrics['error_rate_pct']:.2f}", width))
        if "n" in metrics:
            lines.append(_row("test instances", str(metrics["n"]), width))
        conf = metrics.get("confusion")
        if conf:
            lines.append(_row("confusion tp/tn/fp/fn",
                              "{tp}/{tn}/{fp}/{fn}".format(**conf), width))
    for key in ("baseline", "reduction"):
        if report.get(key) is not None:
            block = report[key]
            lines.append(_rule(width))
            if key == "baseline":
                if block.get("skipped"):
                    lines.append(_row("baseline", "skipped: " +
                                      block.get("reason", "")[:16], width))
                else:
                    lines.append(_row("baseline error rate (%)",
                                      f"{block['error_rate_pct']:.2f}", width))
            else:
                lines.append(_row("error reduction (%)", f"{block:.2f}", width))
    for name, art in report.get("artifacts", {}).items():
        lines.append(_rule(width))
        lines.append(_row(f"artifact {name}", art["sha256"][:16], width))
    lines.append(_rule(width))
    return "\n".join(lines)
