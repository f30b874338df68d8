"""Command-line front end.

Subcommands: build (construct a fixture and write its serialized form),
certify (run the scenario's checks), probe (run its measurement probe),
list (the catalog), describe (one scenario in detail).  Exit codes: 0 on
success, 1 when a certification check fails, 2 for configuration
problems including unknown scenarios, 3 when a fixture cannot be built.
"""

from __future__ import annotations

import argparse
import os
import sys

from .configio import load_config
from .errors import BuildError, CclError, CertificationFailed, ConfigError
from .scenarios import describe, list_scenarios, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccl",
        description="build, certify, and probe finite combed geometries",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("build", "construct a scenario fixture and write its report bundle"),
        ("certify", "run a scenario's certification checks"),
        ("probe", "run a scenario's measurement probe"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out-dir", help="where to write the report bundle")
        p.add_argument("--seed", help="override the configured seed")
        p.add_argument("--radius", type=int, help="override the configured radius")
        p.add_argument(
            "--jobs",
            type=int,
            help="worker processes for the heavy scans "
            "(default: CCL_JOBS or the configured value)",
        )
    sub.add_parser("list", help="list the scenario catalog")
    p = sub.add_parser("describe", help="describe one scenario")
    p.add_argument("name")
    return parser


def _apply_overrides(config, args):
    overrides = {}
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.radius is not None:
        if args.radius < 1:
            raise ConfigError("--radius must be a positive integer")
        overrides["radius"] = args.radius
    if args.jobs is not None:
        jobs = args.jobs
    else:
        env = os.environ.get("CCL_JOBS")
        jobs = config.jobs if env is None else int(env)
    if jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    overrides["jobs"] = jobs
    return config.replace(**overrides)


def _print_report(out: dict):
    print("scenario %s (%s), seed %s" % (out["scenario"], out["mode"], out["seed"]))
    for entry in out.get("suite_checks", ()):
        print("  suite %-38s %s" % (entry["check"], "ok" if entry["ok"] else "FAILED"))
    for entry in out.get("checks", ()):
        tag = " (record only)" if entry["record_only"] else ""
        print(
            "  check %d %-36s %s%s"
            % (
                entry["id"],
                entry["request"]["check"],
                entry["report"]["verdict"],
                tag,
            )
        )
    for entry in out.get("probes", ()):
        if "relative_diameter" in entry:
            print(
                "  probe %s r=%s: relative diameter %s (V_r size %d)"
                % (
                    entry["probe"],
                    entry["radius"],
                    entry["relative_diameter"],
                    entry["n_in_vr"],
                )
            )
        else:
            print(
                "  probe %s r=%s: lambda=%s k=%s density=%s"
                % (
                    entry["probe"],
                    entry.get("domain_radius"),
                    entry["lambda"],
                    entry["k"],
                    entry["density_radius"],
                )
            )
    print("result: %s" % ("ok" if out.get("ok") else "FAILED"))


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            print(list_scenarios())
            return 0
        if args.command == "describe":
            print(describe(args.name))
            return 0
        config = load_config(args.config)
        config = _apply_overrides(config, args)
        out = run_scenario(config, mode=args.command)
    except CertificationFailed as exc:
        print("certification failed: %s" % exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except BuildError as exc:
        print("build error: %s" % exc, file=sys.stderr)
        return 3
    except CclError as exc:
        # anything else from the library means the fixture cannot be
        # measured as configured (truncation too small, element outside
        # the ball, ...), which is a build problem for exit purposes
        print("build error: %s" % exc, file=sys.stderr)
        return 3
    _print_report(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
