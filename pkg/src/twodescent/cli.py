"""Command-line front end: build sites, search for pairs, certify, verify.

Exit codes are a stable contract:

  0  success
  1  mathematical failure (certification failed, verification mismatch)
  2  invalid input (bad arguments, malformed files, domain errors)
  3  a search or scan bound was exhausted

Configuration comes from built-in defaults, overridden by an optional
``key = value`` file (``--config``), overridden by flags.  Environment
variables are never consulted, and no output depends on the wall clock,
so runs are reproducible from the command line alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .certify import Certificate, CertificationFailed, certify, demo_batch, verify
from .exactnum import DomainError
from .pairsearch import (
    CheckpointMismatch,
    SearchExhausted,
    SearchTask,
    find_pairs,
)
from .sitebuilder import (
    SiteBuildError,
    build_site,
    normalize_twist,
    site_from_json,
    site_report,
    site_to_json,
)

__all__ = ["Config", "main"]

_DEFAULTS = {
    "scan_bound": 10**6,
    "congruence_exponent": 5,
    "height_bound": 10**45,
    "jobs": 1,
    "out": None,
    "out_dir": ".",
    "checkpoint": None,
}
_INT_KEYS = ("scan_bound", "congruence_exponent", "height_bound", "jobs")


@dataclass(frozen=True)
class Config:
    scan_bound: int = 10**6
    congruence_exponent: int = 5
    height_bound: int = 10**45
    jobs: int = 1
    out: str | None = None
    out_dir: str = "."
    checkpoint: str | None = None

    def __post_init__(self):
        for name in _INT_KEYS:
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file ('#' starts a comment)."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DomainError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in _DEFAULTS:
            raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                value = int(value)
            except ValueError:
                raise DomainError(
                    f"{path}:{lineno}: {key} needs an integer, got {value!r}"
                ) from None
        values[key] = value
    return values


def resolve_config(args: argparse.Namespace) -> Config:
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return Config(**merged)


def _load_or_build_site(path, D: int, cfg: Config):
    if path is not None:
        return site_from_json(Path(path).read_text())
    return build_site(
        D, scan_bound=cfg.scan_bound, two_exponent=cfg.congruence_exponent
    )


# ----------------------------------------------------------------------
# subcommands


def _cmd_site(args) -> int:
    cfg = resolve_config(args)
    D = normalize_twist(args.D)
    if D != args.D:
        print(
            f"warning: {args.D} is not squarefree; "
            f"using its square class D = {D}",
            file=sys.stderr,
        )
    site = build_site(
        D, scan_bound=cfg.scan_bound, two_exponent=cfg.congruence_exponent
    )
    out = cfg.out or "site.json"
    Path(out).write_text(site_to_json(site) + "\n")
    print(site_report(site))
    print(f"wrote {out}")
    return 0


def _cmd_search(args) -> int:
    cfg = resolve_config(args)
    site = site_from_json(Path(args.site).read_text())
    task = SearchTask(site, height_bound=cfg.height_bound, count=args.count)
    found = 0
    for pair in find_pairs(task, checkpoint_path=cfg.checkpoint, jobs=cfg.jobs):
        found += 1
        print(
            f"pair {found}: a = {pair.a}  b = {pair.b}  "
            f"q1 = {pair.q1}  q2 = {pair.q2}  q3 = {pair.q3}"
        )
    print(f"found {found} admissible pair(s) up to height {cfg.height_bound}")
    return 0


def _cmd_certify(args) -> int:
    cfg = resolve_config(args)
    site = _load_or_build_site(args.site, args.D, cfg)
    certificate = certify(args.a, args.b, args.D, site)
    out = cfg.out or "cert.json"
    Path(out).write_text(certificate.json() + "\n")
    r1, rD, rL = certificate.ranks
    print(
        f"certified: rank E1(Q) = {r1}, rank ED(Q) = {rD}, "
        f"rank over Q(sqrt({certificate.D})) = {rL}"
    )
    print(f"j-invariant = {certificate.j}")
    print(f"sha256 = {certificate.sha256()}")
    print(f"wrote {out}")
    return 0


def _cmd_verify(args) -> int:
    certificate = Certificate.from_json(Path(args.certificate).read_text())
    ok, report = verify(certificate)
    print(report)
    return 0 if ok else 1


def _cmd_demo(args) -> int:
    cfg = resolve_config(args)
    D = normalize_twist(args.D)
    if D != args.D:
        print(
            f"warning: {args.D} is not squarefree; "
            f"using its square class D = {D}",
            file=sys.stderr,
        )
    site = _load_or_build_site(args.site, D, cfg)
    failures: list = []
    certificates = demo_batch(
        D,
        args.count,
        site,
        height_bound=cfg.height_bound,
        jobs=cfg.jobs,
        checkpoint_path=cfg.checkpoint,
        failures=failures,
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, certificate in enumerate(certificates, 1):
        path = out_dir / f"certificate-{index:03d}.json"
        path.write_text(certificate.json() + "\n")
        print(f"{path}: a = {certificate.a}  b = {certificate.b}")
        print(
            f"  j = {certificate.j}  ranks = {certificate.ranks}  "
            f"sha256 = {certificate.sha256()}"
        )
    print(
        f"{len(certificates)} certificate(s), pairwise distinct j-invariants; "
        f"{len(failures)} admitted pair(s) failed certification"
    )
    return 0


# ----------------------------------------------------------------------
# parser and dispatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twodescent",
        description=(
            "Construct and certify elliptic curves of rank one over Q "
            "whose quadratic twist by D has rank zero."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--config", help="key = value configuration file; flags override"
        )
        return p

    p = common(sub.add_parser("site", help="build the prime site for a twist"))
    p.add_argument("--D", type=int, required=True, help="twist integer")
    p.add_argument("--out", help="output path (default site.json)")
    p.add_argument("--scan-bound", dest="scan_bound", type=int)
    p.add_argument("--congruence-exponent", dest="congruence_exponent", type=int)
    p.set_defaults(func=_cmd_site)

    p = common(sub.add_parser("search", help="stream admissible (a, b) pairs"))
    p.add_argument("--site", required=True, help="site JSON file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--height", dest="height_bound", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--checkpoint", help="resumable checkpoint file")
    p.set_defaults(func=_cmd_search)

    p = common(sub.add_parser("certify", help="certify one pair"))
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--a", type=Fraction, required=True, help="rational, e.g. 3 or 3/7")
    p.add_argument("--b", type=Fraction, required=True)
    p.add_argument("--site", help="site JSON file (default: build one for D)")
    p.add_argument("--out", help="certificate path (default cert.json)")
    p.add_argument("--scan-bound", dest="scan_bound", type=int)
    p.add_argument("--congruence-exponent", dest="congruence_exponent", type=int)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("verify", help="recompute a certificate from scratch")
    p.add_argument("certificate", help="certificate JSON file")
    p.set_defaults(func=_cmd_verify)

    p = common(sub.add_parser("demo", help="search and certify a batch"))
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--site", help="site JSON file (default: build one for D)")
    p.add_argument("--height", dest="height_bound", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--checkpoint", help="resumable checkpoint file")
    p.add_argument("--out-dir", dest="out_dir", help="certificate directory")
    p.add_argument("--scan-bound", dest="scan_bound", type=int)
    p.add_argument("--congruence-exponent", dest="congruence_exponent", type=int)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exit_:  # argparse has printed its own message
        return int(exit_.code or 0)
    try:
        return args.func(args)
    except CertificationFailed as failed:
        print(f"certification failed: {failed}", file=sys.stderr)
        for key, value in failed.diagnostics.items():
            print(f"  {key}: {value}", file=sys.stderr)
        return 1
    except SearchExhausted as err:
        print(f"bound exhausted: {err}", file=sys.stderr)
        print(f"  statistics: {err.statistics}", file=sys.stderr)
        return 3
    except SiteBuildError as err:
        if err.stage == "residue-system":
            print(f"invalid input: {err}", file=sys.stderr)
            return 2
        print(f"bound exhausted: {err}", file=sys.stderr)
        return 3
    except (DomainError, CheckpointMismatch) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        print(f"invalid input: {err!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
