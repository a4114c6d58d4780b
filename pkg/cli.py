"""
Command Line Module
Front door for pencil classification, catalog construction and verification
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import List, Optional

from config import Config
from exactalg import OADPError, ParseError, binary_factor, format_poly
from pencils import (
    DegeneratePencil, DegenerateSection, SymmetricPencil, conic_section_symbol,
    pencil_det_and_minor_gcds, segre_symbol,
)
import catalog

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_DEGENERATE = 2
EXIT_PARSE = 3
EXIT_FIXTURE = 4


@dataclass
class RunConfig:
    """Oracle and report settings of one verification run"""
    primes: List[int] = field(default_factory=lambda: list(Config.PRIMES))
    trials: int = Config.TRIALS
    entries: List[str] = field(default_factory=list)
    out: str = Config.REPORT_PATH
    seed: int = Config.SEED
    oracles: bool = True
    timings: bool = False

    def __post_init__(self):
        if not self.primes:
            raise ValueError("at least one oracle prime is required")
        bad = [p for p in self.primes if p not in Config.VETTED_PRIMES]
        if bad:
            raise ValueError(f"primes {bad} are not in the vetted list {list(Config.VETTED_PRIMES)}")
        if len(set(self.primes)) != len(self.primes):
            raise ValueError("oracle primes must be distinct")
        if self.trials < Config.MIN_TRIALS:
            raise ValueError(f"trials must be at least {Config.MIN_TRIALS}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _primes(text: str) -> List[int]:
    try:
        return [int(p) for p in text.split(',') if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prime list {text!r}")


def _plane(text: str) -> List[int]:
    try:
        coeffs = [int(c) for c in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad plane {text!r}")
    if len(coeffs) != 4:
        raise argparse.ArgumentTypeError("a plane has four coefficients")
    return coeffs


def _emit(doc) -> None:
    print(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False))


def cmd_segre(args) -> int:
    """Print the bracket symbol of a pencil file, then its JSON detail"""
    try:
        with open(args.file, 'r', encoding='utf-8') as f:
            pencil = SymmetricPencil.from_json(f.read())
    except OSError as e:
        logger.error(f"cannot read {args.file}: {e}")
        return EXIT_PARSE
    except ParseError as e:
        logger.error(f"{args.file}: {e}")
        return EXIT_PARSE
    except DegeneratePencil as e:
        logger.error(f"{args.file}: {e}")
        return EXIT_DEGENERATE
    try:
        if args.plane is not None:
            symbol = conic_section_symbol(pencil, args.plane)
            det = None
        else:
            symbol = segre_symbol(pencil)
            det, gcds = pencil_det_and_minor_gcds(pencil)
    except (DegeneratePencil, DegenerateSection) as e:
        logger.error(f"{args.file}: {e}")
        return EXIT_DEGENERATE
    print(symbol.display())
    detail = symbol.to_json()
    # cone pencils have det identically zero
    if det is not None:
        detail['det'] = format_poly(det)
        detail['det_factors'] = [[format_poly(f), m] for f, m in binary_factor(det)]
        detail['minor_gcds'] = [format_poly(g) for g in gcds]
    else:
        detail['plane'] = args.plane
    _emit(detail)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    """Verify the selected entries and write the aggregated report"""
    try:
        ids = list(dict.fromkeys(config.entries)) or catalog.list_entries()
        reports = [catalog.verify_entry(entry_id, config) for entry_id in ids]
    except OADPError as e:
        logger.error(f"fixture error: {type(e).__name__}: {e}")
        return EXIT_FIXTURE
    doc = catalog.aggregate_report(reports, config, include_timings=config.timings)
    catalog.write_report(doc, config.out)
    _emit({'verdict': doc['verdict'], 'failed': doc['failed'], 'report': config.out})
    return EXIT_OK if doc['verdict'] == 'pass' else EXIT_FAILED


def cmd_catalog(args) -> int:
    if args.action == 'table':
        _emit([{'id': i, 'configuration': c, 'symbol': s, 'singularities': g}
               for i, c, s, g in catalog.expected_table()])
        return EXIT_OK
    try:
        _emit(catalog.list_entries())
    except catalog.FixtureInvalid as e:
        logger.error(str(e))
        return EXIT_FIXTURE
    return EXIT_OK


def cmd_build(args) -> int:
    try:
        entry, X, sigma = catalog.build_entry(args.entry)
    except catalog.EntryUnbuilt as e:
        _emit({'id': args.entry, 'verdict': 'unbuilt', 'note': str(e)})
        return EXIT_OK
    except OADPError as e:
        logger.error(f"fixture error: {type(e).__name__}: {e}")
        return EXIT_FIXTURE
    doc = entry.to_json()
    if X is not None:
        doc['dim'] = X.dim
        if args.dump_basis:
            doc['basis'] = [format_poly(f) for f in X.basis]
    elif args.dump_basis:
        doc['basis'] = sigma.to_json()
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='oadp', description='Threefolds with one apparent double point: exact checks')
    parser.add_argument('--log-level', default=Config.LOG_LEVEL,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p = sub.add_parser('segre', help='Segre symbol of a pencil JSON file')
    p.add_argument('file')
    p.add_argument('--plane', type=_plane, default=None,
                   help='coefficients a,b,c,d of a plane: symbol of the cut conic pencil')

    p = sub.add_parser('verify', help='run the verification pipeline')
    p.add_argument('--entry', action='append', default=[], dest='entries')
    p.add_argument('--primes', type=_primes, default=list(Config.PRIMES))
    p.add_argument('--trials', type=int, default=Config.TRIALS)
    p.add_argument('--seed', type=int, default=Config.SEED)
    p.add_argument('--out', default=Config.REPORT_PATH)
    p.add_argument('--no-oracles', action='store_true', help='skip the finite-field oracles')
    p.add_argument('--timings', action='store_true', help='include per-check timings in the report')

    p = sub.add_parser('catalog', help='list fixture entries or print the reference table')
    p.add_argument('action', choices=['list', 'table'])

    p = sub.add_parser('build', help='build one entry')
    p.add_argument('--entry', required=True)
    p.add_argument('--dump-basis', action='store_true')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(name)s %(levelname)s %(message)s', stream=sys.stderr)

    if args.command == 'segre':
        return cmd_segre(args)
    if args.command == 'catalog':
        return cmd_catalog(args)
    if args.command == 'build':
        return cmd_build(args)
    try:
        config = RunConfig(primes=args.primes, trials=args.trials, entries=args.entries, out=args.out,
                           seed=args.seed, oracles=not args.no_oracles, timings=args.timings)
    except ValueError as e:
        logger.error(str(e))
        return EXIT_PARSE
    return cmd_verify(config)


if __name__ == '__main__':
    sys.exit(main())
