"""Command-line front end.

Subcommands: gen-trace, owner, analyst, attack, eps, report.  Exit codes:
0 success, 1 validation or protocol error, 2 missing input, 3 malformed
package.  With --json, errors also land on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import adversary, privacy, schemes, synth
from .errors import DomainError, MvanonError, PackageError
from .ppcipher import parse_master_hex
from .randomness import DetRng, seed_from_hex, seed_from_parts
from .schemes import _atomic_write, build_views, load_package, save_package
from .trace import Trace, group_by_prefix, load_trace, serialize_trace


def _read_master(path: str) -> bytes:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"key file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_master_hex(fh.read())


def _int_list(text: str, what: str) -> list[int]:
    text = text.strip()
    if not text:
        raise DomainError(f"{what} list is empty")
    try:
        return [int(cell) for cell in text.split(",")]
    except ValueError as exc:
        raise DomainError(f"{what} list must be comma-separated integers") from exc


def _owner_rng(master0: bytes, master: bytes, seed_hex: str) -> DetRng:
    return DetRng(seed_from_parts(b"owner-v1", master0, master, seed_from_hex(seed_hex)))


def _real_view_index(rng: DetRng, n_views: int) -> int:
    return rng.stream("real-view-index").randbelow(n_views) + 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_trace(args) -> int:
    rng = DetRng.from_hex(args.seed)
    cards = _int_list(args.cards, "cards") if args.cards else int(args.ips_per_group)
    trace = synth.generate_trace(
        groups=args.groups,
        ips_per_group=cards,
        records_per_ip=args.records_per_ip,
        prefix_bits=args.prefix_bits,
        rng=rng,
        cross_group=args.cross_group,
    )
    _atomic_write(args.out, serialize_trace(trace))
    print(f"wrote {len(trace)} records to {args.out}")
    return 0


def cmd_owner(args) -> int:
    master0 = _read_master(args.key0)
    master = _read_master(args.key)
    trace = load_trace(args.trace, prefix_bits=args.prefix_bits)
    rng = _owner_rng(master0, master, args.seed)
    r = _real_view_index(rng, args.views)
    owner = schemes.scheme1_owner if args.scheme == 1 else schemes.scheme2_owner
    pkg, secrets = owner(trace, master0, master, args.prefix_bits, args.views, r, rng)
    save_package(pkg, args.out)

    alpha = args.alpha if args.alpha is not None else pkg.d
    # Group structure survives into the seed (marking and walks keep prefixes),
    # so the published seed itself yields the cardinality profile.
    cards = group_by_prefix(pkg.seed, pkg.p).cards
    report = privacy.make_eps_report(cards, alpha, n_views=pkg.n_views)
    leak_ok = privacy.setup_leakage_ok(pkg.d, pkg.D, pkg.n_views) if pkg.d >= 2 else None
    print(f"scheme={pkg.scheme} d={pkg.d} D={pkg.D} N={pkg.n_views} p={pkg.p}")
    print(f"alpha={alpha} eps_exact={report.eps_exact:.6f} eps_bound={report.eps_bound:.6f}")
    print(f"setup_leakage_ok={'n/a' if leak_ok is None else leak_ok}")
    print(f"package written to {args.out}")
    return 0


def cmd_analyst(args) -> int:
    pkg = load_package(args.package)
    views = build_views(pkg)
    views_dir = os.path.join(args.out, "views")
    reports_dir = os.path.join(args.out, "reports")
    os.makedirs(views_dir, exist_ok=True)
    os.makedirs(reports_dir, exist_ok=True)
    for i, view in enumerate(views, start=1):
        _atomic_write(os.path.join(views_dir, f"view_{i}.csv"), serialize_trace(view))
        if args.analysis == "ip-distribution":
            dist = adversary.ip_distribution(view, pkg.p)
            payload = {
                "analysis": "ip-distribution",
                "temporal": dist.temporal,
                "by_cardinality": dist.by_cardinality,
            }
        else:
            points = adversary.packet_len_ecdf(view)
            payload = {
                "analysis": "packet-len-ecdf",
                "points": [[length, frac] for length, frac in points],
            }
        _atomic_write(
            os.path.join(reports_dir, f"report_{i}.json"),
            json.dumps(payload, sort_keys=True) + "\n",
        )
    print(f"wrote {len(views)} views and reports under {args.out}")
    return 0


def _load_views(dirpath: str, prefix_bits: int) -> list[Trace]:
    if not os.path.isdir(dirpath):
        raise FileNotFoundError(f"views directory not found: {dirpath}")
    names = []
    for name in os.listdir(dirpath):
        if name.startswith("view_") and name.endswith(".csv"):
            try:
                names.append((int(name[5:-4]), name))
            except ValueError:
                continue
    if not names:
        raise FileNotFoundError(f"no view_*.csv files in {dirpath}")
    names.sort()
    if [i for i, _ in names] != list(range(1, len(names) + 1)):
        raise DomainError("view files must be numbered 1..N without gaps")
    return [
        load_trace(os.path.join(dirpath, name), prefix_bits=prefix_bits) for _, name in names
    ]


def cmd_attack(args) -> int:
    groups = _int_list(args.alpha_groups, "alpha-groups")
    original = load_trace(args.trace, prefix_bits=args.prefix_bits)
    views = _load_views(args.views, args.prefix_bits)
    rng = DetRng.from_hex(args.seed)
    knowledge = adversary.build_knowledge(original, groups, args.prefix_bits, rng)
    leak = adversary.leakage(views, knowledge, original)
    cards = group_by_prefix(original, args.prefix_bits).cards
    eps = privacy.eps_exact(cards, knowledge.alpha)
    expected = privacy.expected_candidates(eps, len(views))
    report = adversary.attack_report(knowledge, len(views), leak, eps, expected)
    text = json.dumps(report, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out, text)
        print(f"attack report written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _balanced_cards(D: int, d: int) -> list[int]:
    base, extra = divmod(D, d)
    return [base + 1] * extra + [base] * (d - extra)


def cmd_eps(args) -> int:
    if args.sweep:
        if args.big_d is None or args.alpha is None:
            raise DomainError("--sweep needs --D and --alpha")
        rows = ["d,D,alpha,A,eps_exact,eps_bound"]
        seen = set()
        for tenths in range(1, 11):
            d = max(args.alpha, round(args.big_d * tenths / 10))
            d = min(d, args.big_d)
            if d in seen:
                continue
            seen.add(d)
            rep = privacy.make_eps_report(_balanced_cards(args.big_d, d), args.alpha)
            rows.append(
                f"{d},{args.big_d},{args.alpha},{float(rep.A):.12g},"
                f"{rep.eps_exact:.12g},{rep.eps_bound:.12g}"
            )
        text = "\n".join(rows) + "\n"
        if args.out:
            _atomic_write(args.out, text)
            print(f"sweep written to {args.out}")
        else:
            sys.stdout.write(text)
        return 0

    if args.cards:
        cards = _int_list(args.cards, "cards")
    elif args.big_d is not None and args.small_d is not None:
        cards = _balanced_cards(args.big_d, args.small_d)
    else:
        raise DomainError("give --cards, or both --d and --D")
    if args.alpha is None:
        raise DomainError("--alpha is required")
    rep = privacy.make_eps_report(cards, args.alpha, n_views=args.views)
    print(f"A={float(rep.A):.12g} ({rep.A.numerator}/{rep.A.denominator})")
    print(f"eps_exact={rep.eps_exact:.12g}")
    print(f"eps_bound={rep.eps_bound:.12g}")
    if rep.expected_candidates is not None:
        print(f"expected_candidates={rep.expected_candidates:.6g}")
    return 0


def cmd_report(args) -> int:
    pkg = load_package(args.package)
    master0 = _read_master(args.key0)
    rng = _owner_rng(master0, pkg.master, args.seed)
    r = _real_view_index(rng, pkg.n_views)
    blobs = []
    for i in range(1, pkg.n_views + 1):
        path = os.path.join(args.reports, f"report_{i}.json")
        if not os.path.isfile(path):
            raise FileNotFoundError(f"report file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            blobs.append(fh.read())
    chosen = schemes.extract_report(blobs, r)
    if args.out:
        _atomic_write(args.out, chosen)
        print(f"real view report written to {args.out}")
    else:
        sys.stdout.write(chosen)
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvanon",
        description="Multi-view prefix-preserving anonymization of flow traces",
    )
    parser.add_argument("--json", action="store_true", help="emit errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="generate a synthetic flow trace")
    p.add_argument("--groups", type=int, required=True)
    p.add_argument("--ips-per-group", type=int, default=2)
    p.add_argument("--cards", help="explicit per-group address counts, e.g. 2,3,4")
    p.add_argument("--records-per-ip", type=int, default=4)
    p.add_argument("--prefix-bits", type=int, choices=(8, 16, 24), default=16)
    p.add_argument("--cross-group", action="store_true")
    p.add_argument("--seed", required=True, help="hex seed for deterministic output")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("owner", help="build and publish a seed package")
    p.add_argument("--trace", required=True)
    p.add_argument("--scheme", type=int, choices=(1, 2), required=True)
    p.add_argument("--prefix-bits", type=int, choices=(8, 16, 24), default=16)
    p.add_argument("--views", type=int, required=True, metavar="N")
    p.add_argument("--key0", required=True, help="private first-pass master key file")
    p.add_argument("--key", required=True, help="outsourced walk master key file")
    p.add_argument("--seed", required=True, help="hex seed; reuse it for `report`")
    p.add_argument("--alpha", type=int, help="adversary strength for the eps printout")
    p.add_argument("--out", required=True, help="package directory")
    p.set_defaults(func=cmd_owner)

    p = sub.add_parser("analyst", help="unroll views and run an analysis")
    p.add_argument("--package", required=True)
    p.add_argument(
        "--analysis", choices=("ip-distribution", "packet-len-ecdf"), default="ip-distribution"
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyst)

    p = sub.add_parser("attack", help="simulate the injection adversary")
    p.add_argument("--views", required=True, help="directory with view_*.csv")
    p.add_argument("--trace", required=True, help="original trace (simulation ground truth)")
    p.add_argument("--prefix-bits", type=int, choices=(8, 16, 24), default=16)
    p.add_argument(
        "--alpha-groups", required=True, help="0-based known group indices, e.g. 0,2,5"
    )
    p.add_argument("--seed", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eps", help="indistinguishability numbers for a profile")
    p.add_argument("--cards", help="per-group address counts, e.g. 2,2,3")
    p.add_argument("--d", dest="small_d", type=int, help="group count (balanced profile)")
    p.add_argument("--D", dest="big_d", type=int, help="distinct address count")
    p.add_argument("--alpha", type=int)
    p.add_argument("--views", type=int, metavar="N")
    p.add_argument("--sweep", action="store_true", help="d/D ratio sweep CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eps)

    p = sub.add_parser("report", help="owner-side pickup of the real view's report")
    p.add_argument("--package", required=True)
    p.add_argument("--reports", required=True, help="directory with report_*.json")
    p.add_argument("--key0", required=True)
    p.add_argument("--seed", required=True, help="same seed as the owner run")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PackageError as exc:
        _fail(args, exc, 3)
        return 3
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        _fail(args, exc, 2)
        return 2
    except MvanonError as exc:
        _fail(args, exc, 1)
        return 1


def _fail(args, exc, code: int) -> None:
    if getattr(args, "json", False):
        sys.stderr.write(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc), "exit_code": code},
                sort_keys=True,
            )
            + "\n"
        )
    else:
        sys.stderr.write(f"mvanon: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
