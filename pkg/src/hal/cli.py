"""Batch command-line front end.

Subcommands: protocol (single evaluation, JSON), sweep (grid evaluation,
CSV), ensemble (collective-spin mapping report, JSON), campaign (Monte Carlo
estimation, JSON summary plus optional per-run CSV), validate (oracle
table). Every result document embeds a manifest describing the resolved
parameters, so a rerun with an equal manifest is byte-identical.

Exit codes: 0 success, 1 validate mismatch, 2 validation error (bad values,
malformed grid or config file, impossible herald), 3 truncation error,
64 usage error (unknown flag, missing required flag).

The environment variable HAL_THREADS (integer, default 1) caps worker
threads inside sweep and campaign; output never depends on it.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import (
    GridError,
    HalError,
    ImpossibleOutcomeError,
    TruncationError,
    ValidationError,
)
from .fock_core import fidelity
from .metrology import CampaignConfig, NoiseModel, run_campaign
from .optics_ops import HeraldModel
from .protocol import (
    ProtocolConfig,
    ROW_COLUMNS,
    SWEEP_AXES,
    run_exact,
    run_first_order,
    sweep,
)
from .serialize import csv_lines, dumps, state_to_jsonable
from .spin_ensemble import (
    EnsembleSpec,
    collective_expectations,
    embed_as_fock,
    oscillator_approximation,
    rotated_product_state,
)
from .validate import run_checks

RUN_COLUMNS = ("replica", "attempt_index", "heralded", "x_sample", "noise_value")


class _Parser(argparse.ArgumentParser):
    """argparse variant using exit code 64 for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _parse_amplitude(text: str) -> complex:
    parts = text.split(",")
    if len(parts) not in (1, 2):
        raise ValidationError(f"amplitude must be RE or RE,IM, got {text!r}")
    try:
        re = float(parts[0])
        im = float(parts[1]) if len(parts) == 2 else 0.0
    except ValueError:
        raise ValidationError(f"cannot parse amplitude {text!r}") from None
    return complex(re, im)


def _parse_float(text: str, flag: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"cannot parse {flag} value {text!r}") from None


def _parse_int(text: str, flag: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"cannot parse {flag} value {text!r}") from None


def parse_grid_file(text: str) -> Dict[str, List[float]]:
    """Parse a sweep grid: one `name = start:stop:count` or list per line."""
    axes: Dict[str, List[float]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GridError(f"grid line {lineno}: expected 'name = values', got {raw.strip()!r}")
        name, _, spec = line.partition("=")
        name = name.strip()
        spec = spec.strip()
        if name not in SWEEP_AXES:
            raise GridError(
                f"grid line {lineno}: unknown axis {name!r} (valid: {', '.join(SWEEP_AXES)})"
            )
        if name in axes:
            raise GridError(f"grid line {lineno}: duplicate axis {name!r}")
        if not spec:
            raise GridError(f"grid line {lineno}: empty value list")
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise GridError(f"grid line {lineno}: range must be start:stop:count")
            try:
                start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            except ValueError:
                raise GridError(f"grid line {lineno}: cannot parse range {spec!r}") from None
            if count < 1:
                raise GridError(f"grid line {lineno}: count must be >= 1")
            values = [float(v) for v in np.linspace(start, stop, count)]
        else:
            try:
                values = [float(v) for v in spec.split(",")]
            except ValueError:
                raise GridError(f"grid line {lineno}: cannot parse list {spec!r}") from None
        if name == "cutoff":
            values = [int(v) for v in values]
        axes[name] = values
    if not axes:
        raise GridError("grid file declares no axes")
    return axes


def _protocol_config(args) -> ProtocolConfig:
    herald = HeraldModel(
        read_efficiency=_parse_float(args.read_eff, "--read-eff"),
        dark_count=_parse_float(args.dark_count, "--dark-count"),
    )
    return ProtocolConfig(
        alpha=_parse_amplitude(args.alpha),
        t=_parse_float(args.t, "--t"),
        cutoff=_parse_int(args.cutoff, "--cutoff"),
        input_kind=args.input,
        source_efficiency=_parse_float(args.source_eff, "--source-eff"),
        herald=herald,
    )


def _protocol_params(config: ProtocolConfig, mode: str) -> Dict[str, object]:
    return {
        "mode": mode,
        "alpha_re": config.alpha.re,
        "alpha_im": config.alpha.im,
        "t": config.t,
        "cutoff": config.cutoff,
        "input": config.input_kind,
        "source_eff": config.source_efficiency,
        "read_eff": config.herald.read_efficiency,
        "dark_count": config.herald.dark_count,
        "resolving": config.herald.resolving,
    }


def _manifest(subcommand: str, parameters, seed: Optional[int], outputs: List[str]):
    return {
        "subcommand": subcommand,
        "parameters": parameters,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
    }


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_protocol(args) -> int:
    config = _protocol_config(args)
    result = run_first_order(config.alpha.as_complex(), config.t) if args.mode == "first-order" else run_exact(config)
    manifest = _manifest(
        "protocol", _protocol_params(config, args.mode), None, [args.out or "-"]
    )
    doc = {
        "manifest": manifest,
        "success_prob": result.success_probability,
        "gain": result.gain,
        "fidelity": result.fidelity_to_target,
        "leading_p": result.leading_order.p,
        "leading_gain": result.leading_order.gain,
        "conditional_state": state_to_jsonable(result.conditional_state),
    }
    _write(dumps(doc) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    base = _protocol_config(args)
    with open(args.grid, "r", encoding="utf-8") as fh:
        axes = parse_grid_file(fh.read())
    rows = sweep(base, axes)
    params = _protocol_params(base, "exact")
    params["axes"] = {name: values for name, values in axes.items()}
    manifest = _manifest("sweep", params, None, [args.out or "-"])
    _write(csv_lines(ROW_COLUMNS, rows, dumps(manifest)), args.out)
    return 0


def cmd_ensemble(args) -> int:
    spec = EnsembleSpec(
        _parse_int(args.n_atoms, "--n-atoms"), _parse_float(args.epsilon, "--epsilon")
    )
    cutoff = _parse_int(args.cutoff, "--cutoff")
    k_max = min(spec.N, cutoff)
    state = rotated_product_state(spec, k_max=k_max)
    expect = collective_expectations(state)
    fid = fidelity(embed_as_fock(state, cutoff), oscillator_approximation(spec, cutoff))
    manifest = _manifest(
        "ensemble",
        {"n_atoms": spec.N, "epsilon": spec.epsilon.re, "cutoff": cutoff, "k_max": k_max},
        None,
        [args.out or "-"],
    )
    doc = {
        "manifest": manifest,
        "n_atoms": spec.N,
        "epsilon": spec.epsilon.re,
        "alpha": spec.epsilon.re * math.sqrt(spec.N),
        "tail_mass": state.tail_mass,
        "fidelity_to_coherent": fid,
        "commutator_deviation": expect.commutator_deviation,
        "var_x": expect.var_x,
        "var_p": expect.var_p,
    }
    _write(dumps(doc) + "\n", args.out)
    return 0


def _require(cp: configparser.ConfigParser, section: str, name: str) -> str:
    if not cp.has_option(section, name):
        raise ValidationError(f"missing field: {section}.{name}")
    return cp.get(section, name)


def _optional(cp, section, name, fallback):
    return cp.get(section, name) if cp.has_option(section, name) else fallback


def _parse_bool(text: str, where: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"cannot parse boolean {where} value {text!r}")


def parse_campaign_file(text: str, seed_override: Optional[int] = None) -> CampaignConfig:
    """Build a CampaignConfig from key=value sections.

    Sections: [campaign] scheme, true_alpha, total_time, replicas, seed,
    run_period; [noise] kind, sigma_tech, lambda, offset; [protocol] (for the
    amplified scheme) alpha, t, cutoff, input_kind, source_efficiency;
    [herald] read_efficiency, dark_count, mode, resolving. Field names match
    the library types; a missing required field is a validation error naming
    it as section.name.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed campaign config: {exc}") from None
    for section in cp.sections():
        if section not in ("campaign", "noise", "protocol", "herald"):
            raise ValidationError(f"unknown config section [{section}]")
    if not cp.has_section("campaign"):
        raise ValidationError("missing field: campaign.scheme")
    scheme = _require(cp, "campaign", "scheme").strip()
    true_alpha = _parse_float(_require(cp, "campaign", "true_alpha"), "campaign.true_alpha")
    total_time = _parse_float(_require(cp, "campaign", "total_time"), "campaign.total_time")
    replicas = _parse_int(_require(cp, "campaign", "replicas"), "campaign.replicas")
    run_period = _parse_float(_optional(cp, "campaign", "run_period", "0.1"), "campaign.run_period")
    if seed_override is not None:
        seed = seed_override
    else:
        seed = _parse_int(_require(cp, "campaign", "seed"), "campaign.seed")

    if not cp.has_section("noise"):
        raise ValidationError("missing field: noise.kind")
    noise = NoiseModel(
        kind=_require(cp, "noise", "kind").strip(),
        sigma_tech=_parse_float(_optional(cp, "noise", "sigma_tech", "0"), "noise.sigma_tech"),
        lam=_parse_float(_optional(cp, "noise", "lambda", "0"), "noise.lambda"),
        offset=_parse_float(_optional(cp, "noise", "offset", "0"), "noise.offset"),
    )

    protocol = None
    if scheme == "amplified" or cp.has_section("protocol"):
        if not cp.has_section("protocol"):
            raise ValidationError("missing field: protocol.alpha")
        herald = HeraldModel(
            read_efficiency=_parse_float(
                _optional(cp, "herald", "read_efficiency", "1") if cp.has_section("herald") else "1",
                "herald.read_efficiency",
            ),
            dark_count=_parse_float(
                _optional(cp, "herald", "dark_count", "0") if cp.has_section("herald") else "0",
                "herald.dark_count",
            ),
            mode=(_optional(cp, "herald", "mode", "A").strip() if cp.has_section("herald") else "A"),
            resolving=_parse_bool(
                _optional(cp, "herald", "resolving", "true") if cp.has_section("herald") else "true",
                "herald.resolving",
            ),
        )
        protocol = ProtocolConfig(
            alpha=_parse_amplitude(_require(cp, "protocol", "alpha")),
            t=_parse_float(_require(cp, "protocol", "t"), "protocol.t"),
            cutoff=_parse_int(_optional(cp, "protocol", "cutoff", "12"), "protocol.cutoff"),
            input_kind=_optional(cp, "protocol", "input_kind", "truncated").strip(),
            source_efficiency=_parse_float(
                _optional(cp, "protocol", "source_efficiency", "1"), "protocol.source_efficiency"
            ),
            herald=herald,
        )
    return CampaignConfig(
        scheme=scheme,
        true_alpha=true_alpha,
        total_time=total_time,
        noise=noise,
        seed=seed,
        replicas=replicas,
        run_period=run_period,
        protocol=protocol,
    )


def _campaign_params(config: CampaignConfig) -> Dict[str, object]:
    params: Dict[str, object] = {
        "scheme": config.scheme,
        "true_alpha": config.true_alpha,
        "total_time": config.total_time,
        "run_period": config.run_period,
        "replicas": config.replicas,
        "attempts": config.attempts,
        "noise": {
            "kind": config.noise.kind,
            "sigma_tech": config.noise.sigma_tech,
            "lambda": config.noise.lam,
            "offset": config.noise.offset,
        },
    }
    if config.protocol is not None:
        params["protocol"] = _protocol_params(config.protocol, "exact")
    return params


def cmd_campaign(args) -> int:
    seed_override = _parse_int(args.seed, "--seed") if args.seed is not None else None
    with open(args.config, "r", encoding="utf-8") as fh:
        config = parse_campaign_file(fh.read(), seed_override)
    record = args.runs_csv is not None
    summary = run_campaign(config, record_runs=record)
    outputs = [args.out or "-"]
    if record:
        outputs.append(args.runs_csv)
    manifest = _manifest("campaign", _campaign_params(config), config.seed, outputs)
    doc = {
        "manifest": manifest,
        "attempts": summary.attempts,
        "replicas": summary.replicas,
        "successes": summary.successes,
        "estimate_mean": summary.estimate_mean,
        "bias": summary.bias,
        "variance": summary.variance,
        "rmse": summary.rmse,
        "per_replica_estimates": list(summary.per_replica_estimates),
        "per_replica_successes": list(summary.per_replica_successes),
        "no_success_replicas": list(summary.no_success_replicas),
        "elapsed_model_time": summary.elapsed_model_time,
    }
    _write(dumps(doc) + "\n", args.out)
    if record:
        def rows():
            for runs in summary.run_records:
                for k in range(summary.attempts):
                    yield {
                        "replica": runs.replica,
                        "attempt_index": k,
                        "heralded": int(runs.heralded[k]),
                        "x_sample": runs.x_sample[k],
                        "noise_value": runs.noise_value[k],
                    }
        _write(csv_lines(RUN_COLUMNS, rows(), dumps(manifest)), args.runs_csv)
    return 0


def cmd_validate(args) -> int:
    checks = run_checks()
    name_width = max(len(c.name) for c in checks)
    lines = [f"{'check'.ljust(name_width)}  {'measured':>12}  {'tolerance':>10}  status"]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(
            f"{c.name.ljust(name_width)}  {c.measured:12.3e}  {c.tolerance:10.1e}  {status}"
        )
    failed = [c.name for c in checks if not c.passed]
    if failed:
        lines.append(f"failed: {', '.join(failed)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 1 if failed else 0


def _add_protocol_flags(p: argparse.ArgumentParser, require_t: bool) -> None:
    p.add_argument("--alpha", default="0", help="input amplitude RE or RE,IM (default 0)")
    p.add_argument("--t", required=require_t, default=None if require_t else "0.1",
                   help="beam-splitter transmission amplitude")
    p.add_argument("--cutoff", default="12", help="Fock cutoff per mode (default 12)")
    p.add_argument("--input", choices=("truncated", "coherent"), default="truncated",
                   help="signal form: |0>+alpha|1> or the full coherent state")
    p.add_argument("--source-eff", default="1", help="single-photon source efficiency p1")
    p.add_argument("--read-eff", default="1", help="herald read efficiency")
    p.add_argument("--dark-count", default="0", help="herald dark-count probability")
    p.add_argument("--out", default=None, help="output path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hal", description="heralded-amplification simulation toolkit")
    parser.add_argument("--version", action="version", version=f"hal {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("protocol", help="evaluate one protocol point, print JSON")
    _add_protocol_flags(p, require_t=True)
    p.add_argument("--mode", choices=("exact", "first-order"), default="exact")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("sweep", help="evaluate a parameter grid, print CSV")
    _add_protocol_flags(p, require_t=False)
    p.add_argument("--grid", required=True, help="grid file: name = start:stop:count or comma list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ensemble", help="collective-spin to oscillator report, print JSON")
    p.add_argument("--n-atoms", required=True, help="number of atoms N")
    p.add_argument("--epsilon", required=True, help="per-atom rotation amplitude")
    p.add_argument("--cutoff", default="12", help="Fock cutoff for the mapped state")
    p.add_argument("--out", default=None, help="output path (default: standard output)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("campaign", help="run an estimation campaign from a config file")
    p.add_argument("config", help="campaign config file (key=value sections)")
    p.add_argument("--seed", default=None, help="override the seed from the config file")
    p.add_argument("--out", default=None, help="summary JSON path (default: standard output)")
    p.add_argument("--runs-csv", default=None, help="also write per-run records to this CSV")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("validate", help="run the oracle suite, print the comparison table")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TruncationError as exc:
        print(f"hal: truncation error: {exc}", file=sys.stderr)
        return 3
    except ImpossibleOutcomeError as exc:
        print(f"hal: impossible outcome: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as exc:
        print(f"hal: error: {exc}", file=sys.stderr)
        return 2
    except HalError as exc:
        print(f"hal: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
