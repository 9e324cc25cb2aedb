"""Command-line interface: align, simulate, extract-sse, summarize.

Alignment convention: the first configuration (X) is the reference and the
second (Y) is matched onto it via y -> c A y + tau.  All commands are
deterministic given their arguments, including the seed.

Exit codes: 0 success, 2 validation or parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    Configuration,
    centroid,
    random_rotation,
    read_configuration_csv,
    write_configuration_csv,
)
from .model import PriorSpec
from .protein import configuration_from_sses, parse_sse_file
from .sampler import (
    ChainOutput,
    ChainSettings,
    merge_outputs,
    read_trace,
    run_chain,
    summarize,
    summary_json_dict,
    trace_export,
)

# flag spelling for every PriorSpec field and every ChainSettings field;
# the help doc test asserts this map stays complete.
PRIOR_FLAGS = {
    "kappa": "--kappa",
    "alpha_c": "--alpha-c",
    "lambda_c": "--lambda-c",
    "alpha": "--alpha",
    "beta": "--beta",
    "sigma_tau": "--sigma-tau",
    "mu_tau": "--mu-tau",
    "f0": "--f0",
    "translation_enabled": "--no-translation",
}
SETTINGS_FLAGS = {
    "iterations": "--iters",
    "burnin": "--burnin",
    "thin": "--thin",
    "seed": "--seed",
    "n_scales": "--scales",
    "order_constrained": "--order-preserving",
    "labeled": "--labeled",
}


@dataclass
class RunManifest:
    """Resolved inputs of one CLI invocation."""

    command: str
    inputs: list
    outdir: Path
    priors: PriorSpec | None
    settings: ChainSettings | None
    chains: int = 1
    extra: dict | None = None


def _add_prior_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("priors (PriorSpec keys)")
    g.add_argument("--kappa", type=float, default=100.0, help="matching propensity kappa")
    g.add_argument("--alpha-c", type=float, default=1.0, help="gamma shape alpha_c of the scale prior")
    g.add_argument("--lambda-c", type=float, default=1.0, help="gamma rate lambda_c of the scale prior")
    g.add_argument("--alpha", type=float, default=1.0, help="gamma shape alpha of the noise precision prior")
    g.add_argument("--beta", type=float, default=1.0, help="gamma rate beta of the noise precision prior")
    g.add_argument("--sigma-tau", type=float, default=100.0, help="translation prior s.d. sigma_tau")
    g.add_argument(
        "--mu-tau",
        default="auto",
        help="translation prior mean mu_tau: 'auto' (centroid difference) or x,y[,z]",
    )
    g.add_argument(
        "--f0",
        default=None,
        help="rotation concentration f0, d*d comma-separated row-major (default zeros: uniform)",
    )
    g.add_argument(
        "--no-translation",
        action="store_true",
        help="disable the translation term (translation_enabled=False)",
    )
    g.add_argument("--priors-file", default=None, help="key=value prior file; flags override it")


def _add_settings_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("chain settings (ChainSettings fields)")
    g.add_argument("--iters", type=int, default=100_000, help="iterations per chain")
    g.add_argument("--burnin", type=int, default=10_000, help="burn-in iterations (burnin)")
    g.add_argument("--thin", type=int, default=10, help="thinning interval (thin)")
    g.add_argument("--seed", type=int, default=0, help="base RNG seed (seed)")
    g.add_argument("--scales", type=int, choices=(1, 2), default=1, help="number of scale factors (n_scales)")
    g.add_argument(
        "--order-preserving",
        action="store_true",
        help="restrict matchings to preserve sequence order (order_constrained)",
    )
    g.add_argument(
        "--labeled",
        action="store_true",
        help="labeled mode: freeze the matching to the identity pairing (labeled)",
    )
    g.add_argument("--chains", type=int, default=1, help="independent chains, seeds seed..seed+chains-1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapealign",
        description="Bayesian alignment of point configurations under similarity transformations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="align a Y configuration onto an X configuration")
    p_align.add_argument("x_csv", help="reference configuration CSV (X)")
    p_align.add_argument("y_csv", help="configuration to transform (Y)")
    p_align.add_argument("-o", "--out", required=True, help="output directory")
    _add_prior_flags(p_align)
    _add_settings_flags(p_align)

    p_sim = sub.add_parser("simulate", help="generate a synthetic X/Y pair with known ground truth")
    p_sim.add_argument("-o", "--out", required=True, help="output directory")
    p_sim.add_argument("--m", type=int, default=10, help="number of points")
    p_sim.add_argument("--dims", type=int, choices=(2, 3), default=3, help="dimension")
    p_sim.add_argument("--scale", type=float, default=1.5, help="true scale factor")
    p_sim.add_argument("--noise", type=float, default=0.1, help="noise s.d. per coordinate")
    p_sim.add_argument("--seed", type=int, default=0, help="RNG seed")
    p_sim.add_argument(
        "--rotation", choices=("random", "identity"), default="random", help="true rotation"
    )
    p_sim.add_argument("--tau", default=None, help="true translation x,y[,z] (default zeros)")

    p_sse = sub.add_parser("extract-sse", help="convert an SSE fixture file to a configuration CSV")
    p_sse.add_argument("sse_file", help="SSE fixture file")
    p_sse.add_argument("-o", "--out", required=True, help="output configuration CSV path")
    p_sse.add_argument("--id", default=None, help="configuration id (default: file stem)")

    p_sum = sub.add_parser("summarize", help="merge trace CSVs into a posterior summary JSON")
    p_sum.add_argument("traces", nargs="+", help="trace CSV files with matching schemas")
    p_sum.add_argument("-o", "--out", required=True, help="output directory")

    return parser


def _parse_vector(text: str, dim: int, what: str) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != dim:
        raise ValueError(f"{what} needs {dim} comma-separated values, got {len(parts)}")
    return np.array([float(p) for p in parts])


def _priors_from_args(args, x: Configuration, y: Configuration) -> PriorSpec:
    d = x.dim
    if args.priors_file is not None:
        base = PriorSpec.from_config(args.priors_file)
        if base.dim != d:
            raise ValueError(f"priors file dimension {base.dim} does not match data dimension {d}")
        defaults = build_parser().parse_args(["align", "x", "y", "-o", "z"])
        values = {}
        for name in ("kappa", "alpha_c", "lambda_c", "alpha", "beta", "sigma_tau"):
            flag_val = getattr(args, name)
            values[name] = flag_val if flag_val != getattr(defaults, name) else getattr(base, name)
        f0 = base.f0
        mu = base.mu_tau
        enabled = base.translation_enabled and not args.no_translation
    else:
        values = {
            name: getattr(args, name)
            for name in ("kappa", "alpha_c", "lambda_c", "alpha", "beta", "sigma_tau")
        }
        f0 = np.zeros((d, d))
        mu = None
        enabled = not args.no_translation
    if args.f0 is not None:
        flat = [float(v) for v in args.f0.split(",")]
        if len(flat) != d * d:
            raise ValueError(f"--f0 needs {d * d} values for d={d}")
        f0 = np.array(flat).reshape(d, d)
    if args.mu_tau == "auto":
        if mu is None:
            mu = centroid(x) - centroid(y) if enabled else np.zeros(d)
    else:
        mu = _parse_vector(args.mu_tau, d, "--mu-tau")
    return PriorSpec(f0=f0, mu_tau=mu, translation_enabled=enabled, **values)


def _settings_from_args(args) -> ChainSettings:
    return ChainSettings(
        iterations=args.iters,
        burnin=args.burnin,
        thin=args.thin,
        seed=args.seed,
        n_scales=args.scales,
        order_constrained=args.order_preserving,
        labeled=args.labeled,
    )


def _require_file(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def _modal_groups(output: ChainOutput) -> dict:
    """Per Y-point modal scale group among samples where the point is matched."""
    counts: dict = {}
    for rec in output.records:
        for _, k, grp in rec.matches:
            key = (k, grp)
            counts[key] = counts.get(key, 0) + 1
    modal = {}
    for (k, grp), cnt in sorted(counts.items()):
        best = modal.get(k)
        if best is None or cnt > best[1]:
            modal[k] = (grp, cnt)
    return {k: grp for k, (grp, _) in modal.items()}


def _write_superposition(path, x: Configuration, y: Configuration, output: ChainOutput, summary):
    """X rows plus Y transformed by the posterior mean transform.

    In two-scale mode each Y point uses the mean scale/translation of its
    modal matched group (group 1 when the point was never matched).
    """
    g = output.settings.n_scales
    scales_mean = np.array([rec.scales for rec in output.records]).mean(axis=0)
    rotation = summary.mean_rotation
    translations = summary.mean_translation
    modal = _modal_groups(output) if g == 2 else {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "seq", "group", "x", "y", "z"][: 3 + x.dim])
        for i in range(x.m):
            seq = "" if x.seq is None else str(int(x.seq[i]))
            writer.writerow([x.id, seq, ""] + [repr(float(v)) for v in x.points[i]])
        for k in range(y.m):
            grp = modal.get(k + 1, g - 1)
            pt = scales_mean[grp] * rotation @ y.points[k] + translations[grp]
            seq = "" if y.seq is None else str(int(y.seq[k]))
            writer.writerow(
                [f"{y.id}:mean-transform", seq, str(grp) if g == 2 else ""]
                + [repr(float(v)) for v in pt]
            )


def cmd_align(manifest: RunManifest) -> int:
    x = read_configuration_csv(manifest.inputs[0])
    y = read_configuration_csv(manifest.inputs[1])
    outdir = manifest.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    base = manifest.settings
    for chain_idx in range(manifest.chains):
        settings = ChainSettings(
            iterations=base.iterations,
            burnin=base.burnin,
            thin=base.thin,
            seed=base.seed + chain_idx,
            n_scales=base.n_scales,
            order_constrained=base.order_constrained,
            labeled=base.labeled,
        )
        output = run_chain(x, y, manifest.priors, settings)
        trace_export(output, outdir / f"trace_{chain_idx}.csv")
        outputs.append(output)
    merged = merge_outputs(outputs)
    summary = summarize(merged)
    (outdir / "summary.json").write_text(
        json.dumps(summary_json_dict(summary), indent=2, sort_keys=True) + "\n"
    )
    with open(outdir / "matching.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "k", "posterior_probability"])
        for (j, k), prob in summary.match_probs.items():
            writer.writerow([j, k, repr(prob)])
    _write_superposition(outdir / "superposition.csv", x, y, merged, summary)
    manifest.priors.to_config(outdir / "priors.cfg")
    return 0


def cmd_simulate(manifest: RunManifest) -> int:
    opts = manifest.extra
    m, d = opts["m"], opts["dims"]
    if m < 1:
        raise ValueError("--m must be at least 1")
    if opts["scale"] <= 0:
        raise ValueError("--scale must be positive")
    if opts["noise"] < 0:
        raise ValueError("--noise must be nonnegative")
    rng = np.random.default_rng(opts["seed"])
    outdir = manifest.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    y_pts = rng.uniform(-1.0, 1.0, size=(m, d))
    rotation = np.eye(d) if opts["rotation"] == "identity" else random_rotation(d, rng)
    tau = np.zeros(d) if opts["tau"] is None else _parse_vector(opts["tau"], d, "--tau")
    perm = rng.permutation(m)
    x_pts = opts["scale"] * y_pts[perm] @ rotation.T + tau
    x_pts = x_pts + opts["noise"] * rng.standard_normal((m, d))
    x = Configuration("sim_x", x_pts, seq=np.arange(1, m + 1))
    y = Configuration("sim_y", y_pts, seq=np.arange(1, m + 1))
    write_configuration_csv(x, outdir / "x.csv")
    write_configuration_csv(y, outdir / "y.csv")
    truth = {
        "scale": opts["scale"],
        "noise_sd": opts["noise"],
        "seed": opts["seed"],
        "rotation": rotation.tolist(),
        "tau": tau.tolist(),
        "pairs": [[j + 1, int(perm[j]) + 1] for j in range(m)],
    }
    (outdir / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_extract_sse(manifest: RunManifest) -> int:
    sse_path = manifest.inputs[0]
    records = parse_sse_file(sse_path)
    if not records:
        raise ValueError(f"{sse_path}: no secondary structure elements")
    cfg_id = manifest.extra["id"] or Path(sse_path).stem
    cfg = configuration_from_sses(records, cfg_id)
    out = manifest.outdir
    out.parent.mkdir(parents=True, exist_ok=True)
    write_configuration_csv(cfg, out)
    return 0


def cmd_summarize(manifest: RunManifest) -> int:
    outputs = [read_trace(p) for p in manifest.inputs]
    merged = merge_outputs(outputs)
    summary = summarize(merged)
    outdir = manifest.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "summary.json").write_text(
        json.dumps(summary_json_dict(summary), indent=2, sort_keys=True) + "\n"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "align":
            x_path = _require_file(args.x_csv)
            y_path = _require_file(args.y_csv)
            if args.priors_file is not None:
                _require_file(args.priors_file)
            x = read_configuration_csv(x_path)
            y = read_configuration_csv(y_path)
            manifest = RunManifest(
                command="align",
                inputs=[x_path, y_path],
                outdir=Path(args.out),
                priors=_priors_from_args(args, x, y),
                settings=_settings_from_args(args),
                chains=args.chains,
            )
            if manifest.chains < 1:
                raise ValueError("--chains must be at least 1")
            return cmd_align(manifest)
        if args.command == "simulate":
            manifest = RunManifest(
                command="simulate",
                inputs=[],
                outdir=Path(args.out),
                priors=None,
                settings=None,
                extra={
                    "m": args.m,
                    "dims": args.dims,
                    "scale": args.scale,
                    "noise": args.noise,
                    "seed": args.seed,
                    "rotation": args.rotation,
                    "tau": args.tau,
                },
            )
            return cmd_simulate(manifest)
        if args.command == "extract-sse":
            manifest = RunManifest(
                command="extract-sse",
                inputs=[_require_file(args.sse_file)],
                outdir=Path(args.out),
                priors=None,
                settings=None,
                extra={"id": args.id},
            )
            return cmd_extract_sse(manifest)
        if args.command == "summarize":
            manifest = RunManifest(
                command="summarize",
                inputs=[_require_file(t) for t in args.traces],
                outdir=Path(args.out),
                priors=None,
                settings=None,
            )
            return cmd_summarize(manifest)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
