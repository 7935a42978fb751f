import os
import sys
import json
import signal
import argparse
from typing import List, Optional, Tuple

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from allocators import ALGORITHMS, allocate
from fuzzer import CSV_COLUMNS, plan_jobs, run_campaign, summarize
from generators import GenSpec, generate
from graphs import build_graph, to_dot
from logger import configure_logging
from models import (
    GraphKind, InputError, InstanceKind, RunTrace, ThreeValueCase, ThreeValueInstance
)
from repository import ArtifactRepository
from utils import format_value, parse_value
from verification import ORACLE_FILTERS, VERIFY_CHECKS, brute_force_best_alpha, verify_allocation

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

def banner(title: str):
    print("\n" + "="*60, file=sys.stderr)
    print(title, file=sys.stderr)
    print("="*60, file=sys.stderr)

def emit_json(data, path: Optional[str], repository: ArtifactRepository):
    if path:
        repository.write_json(path, data)
    else:
        print(json.dumps(data, indent=2))

def parse_range(text: str) -> Tuple[int, int]:
    """'5' or '2:8' (inclusive)"""
    low, sep, high = text.partition(':')
    try:
        bounds = (int(low), int(high)) if sep else (int(low), int(low))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range '{text}', expected N or LOW:HIGH") from None
    if bounds[0] > bounds[1]:
        raise argparse.ArgumentTypeError(f"empty range '{text}'")
    return bounds

def parse_checks(text: str) -> List[str]:
    checks = [c.strip() for c in text.split(',') if c.strip()]
    unknown = [c for c in checks if c not in VERIFY_CHECKS]
    if not checks or unknown:
        raise argparse.ArgumentTypeError(f"checks must be a subset of {','.join(VERIFY_CHECKS)}")
    return checks

# ========== COMMANDS ==========

def cmd_allocate(args, config, logger, repository) -> int:
    banner(f"⚖️  ALLOCATE - {args.algo}")
    instance = repository.load_instance(args.input)
    inst = instance.to_instance()
    print(f"📥 Instance: n={inst.num_agents}, m={inst.num_goods}", file=sys.stderr)

    trace = RunTrace()
    context = {'command': 'allocate', 'algorithm': args.algo, 'input': args.input}
    try:
        result = allocate(args.algo, instance, debug=args.debug or config.is_debug(), logger=logger, trace=trace)
        if not result.passed:
            raise AssertionError(
                f"certificate failed: alpha {format_value(result.certificate.alpha.alpha)}, "
                f"complete {result.certificate.complete}")
    except InputError:
        raise
    except Exception as e:
        logger.error(f"Allocation failed: {e}", metadata=context, exc_info=True)
        crash_dir = repository.write_crash(instance, trace, e, context)
        print(f"❌ Internal error: {e}\n📁 Crash artifact: {crash_dir}", file=sys.stderr)
        if args.trace:
            repository.write_trace(args.trace, trace)
        return EXIT_INTERNAL

    emit_json({
        **result.allocation.to_dict(),
        'algorithm': result.algorithm,
        'case': result.case.value if result.case else None,
        'iterations': result.iterations,
        'certificate': result.certificate.to_dict()
    }, args.output, repository)
    if args.trace:
        repository.write_trace(args.trace, trace)
        print(f"🧾 Trace: {args.trace}", file=sys.stderr)
    if args.dot:
        graph = build_graph(inst, result.allocation, GraphKind.PLAIN)
        with open(args.dot, 'w') as f:
            f.write(to_dot(graph))
        print(f"🕸️  Envy graph: {args.dot}", file=sys.stderr)

    print(f"✅ alpha = {format_value(result.certificate.alpha.alpha)} after {result.iterations} iterations",
          file=sys.stderr)
    return EXIT_OK

def cmd_verify(args, config, logger, repository) -> int:
    source = repository.load_instance(args.input)
    inst = source.to_instance()
    alloc = repository.load_allocation(args.allocation, inst.num_goods)
    try:
        alpha = parse_value(args.alpha)
    except ValueError as e:
        raise InputError(f"invalid alpha: {e}") from None
    params = source.params if isinstance(source, ThreeValueInstance) else None
    report = verify_allocation(inst, alloc, alpha, args.checks, params)
    print(json.dumps(report.to_dict(), indent=2))
    if report.passed:
        print("✅ All checks passed", file=sys.stderr)
        return EXIT_OK
    print(f"❌ Failed checks: {[c for c, ok in report.checks.items() if not ok]}", file=sys.stderr)
    return EXIT_VERIFY_FAILED

def cmd_fuzz(args, config, logger, repository) -> int:
    banner(f"🎲 FUZZ - {args.family} x {args.seeds}")
    workers = args.workers or config.get_int('fuzz_workers', 1)
    jobs = plan_jobs(args.family, args.n, args.m, args.seeds, args.base_seed, args.case,
                     args.zero_c, args.grid, args.debug or config.is_debug(), repository.crash_dir)
    rows = run_campaign(jobs, workers, logger, verbose=args.verbose)
    repository.write_report(args.report, [r.to_csv_row() for r in rows], CSV_COLUMNS)
    summary = summarize(rows)
    print(f"📊 {summary.passed}/{summary.total} passed, {summary.crashes} crashes", file=sys.stderr)
    print(f"📄 Report: {args.report}", file=sys.stderr)
    for row in rows:
        if not row.passed:
            print(f"   ❌ seed {row.seed}: {row.error}", file=sys.stderr)
    if summary.crashes:
        return EXIT_INTERNAL
    return EXIT_OK if summary.all_passed else EXIT_VERIFY_FAILED

def cmd_oracle(args, config, logger, repository) -> int:
    inst = repository.load_instance(args.input).to_instance()
    filters = [ORACLE_FILTERS[args.filter]] if args.filter else []
    result = brute_force_best_alpha(inst, args.max_bundle_size, not args.partial, filters)
    print(json.dumps(result.to_dict(), indent=2))
    if result.exists:
        print(f"🔎 best alpha = {format_value(result.best.alpha)}", file=sys.stderr)
    else:
        print("🔎 none exists", file=sys.stderr)
    return EXIT_OK

def cmd_generate(args, config, logger, repository) -> int:
    if args.spec:
        with open(args.spec, 'r') as f:
            try:
                spec = GenSpec.from_dict(json.load(f))
            except json.JSONDecodeError as e:
                raise InputError(f"malformed generator spec {args.spec}: {e}") from e
    else:
        spec = GenSpec(seed=args.seed, family=args.family, n=args.n_agents, m=args.m_goods,
                       grid=args.grid, allow_zero=not args.no_zero, case=args.case, zero_c=args.zero_c)
    emit_json(generate(spec).to_dict(), args.output, repository)
    return EXIT_OK

def cmd_serve(args, config, logger, repository) -> int:
    from api import create_app

    app = create_app(config, logger, repository)
    banner("🚀 EFX ALLOCATION SERVICE - STARTING")
    print(f"\n🌍 Host: {args.host}", file=sys.stderr)
    print(f"🔌 Port: {args.port}", file=sys.stderr)
    print("\n📡 Endpoints:", file=sys.stderr)
    print("   ├─ POST /api/allocate  - Run an allocator", file=sys.stderr)
    print("   ├─ POST /api/verify    - Check an allocation", file=sys.stderr)
    print("   ├─ POST /api/oracle    - Brute-force best alpha", file=sys.stderr)
    print("   ├─ POST /api/generate  - Seeded instance", file=sys.stderr)
    print("   └─ GET  /health        - Health check", file=sys.stderr)

    def signal_handler(sig, frame):
        print("\n\n🛑 Shutting down...", file=sys.stderr)
        sys.exit(0)

    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)
    app.run(host=args.host, port=args.port, threaded=True)
    return EXIT_OK

COMMANDS = {
    'allocate': cmd_allocate,
    'verify': cmd_verify,
    'fuzz': cmd_fuzz,
    'oracle': cmd_oracle,
    'generate': cmd_generate,
    'serve': cmd_serve,
}

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Approximate EFX allocation toolkit')
    parser.add_argument('--verbose', action='store_true', help='Log info messages')
    sub = parser.add_subparsers(dest='command', required=True)

    families = [k.value for k in InstanceKind]
    cases = [c.value for c in ThreeValueCase]

    p = sub.add_parser('allocate', help='Compute a 2/3-EFX allocation')
    p.add_argument('--algo', required=True, choices=sorted(ALGORITHMS))
    p.add_argument('--input', required=True, help='Instance JSON')
    p.add_argument('--output', help='Allocation JSON (stdout if omitted)')
    p.add_argument('--trace', help='Write the run trace as JSON-Lines')
    p.add_argument('--dot', help='Write the final envy graph in DOT format')
    p.add_argument('--debug', action='store_true', help='Re-check invariants every iteration')

    p = sub.add_parser('verify', help='Check an allocation')
    p.add_argument('--input', required=True, help='Instance JSON')
    p.add_argument('--allocation', required=True, help='Allocation JSON')
    p.add_argument('--alpha', default='2/3')
    p.add_argument('--checks', type=parse_checks, default=['efx'],
                   help=f"Comma separated subset of {','.join(VERIFY_CHECKS)}")

    p = sub.add_parser('fuzz', help='Seeded allocate+verify campaign')
    p.add_argument('--family', required=True, choices=families)
    p.add_argument('--case', choices=cases)
    p.add_argument('--zero-c', action='store_true', help='3-value instances with c = 0')
    p.add_argument('--n', type=parse_range, default=(2, 5), help='Agent range LOW:HIGH')
    p.add_argument('--m', type=parse_range, default=(3, 12), help='Good range LOW:HIGH')
    p.add_argument('--seeds', type=int, default=100)
    p.add_argument('--base-seed', type=int, default=0)
    p.add_argument('--grid', type=int, default=100)
    p.add_argument('--workers', type=int, default=0, help='0 uses the fuzz_workers setting')
    p.add_argument('--report', required=True, help='CSV report path')
    p.add_argument('--debug', action='store_true')

    p = sub.add_parser('oracle', help='Brute-force best alpha')
    p.add_argument('--input', required=True)
    p.add_argument('--max-bundle-size', type=int)
    p.add_argument('--partial', action='store_true', help='Allow goods to stay in the pool')
    p.add_argument('--filter', choices=sorted(ORACLE_FILTERS))

    p = sub.add_parser('generate', help='Seeded instance generator')
    p.add_argument('--spec', help='GenSpec JSON file (overrides the flags)')
    p.add_argument('--family', default=InstanceKind.ADDITIVE.value, choices=families)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--n-agents', type=int, default=3)
    p.add_argument('--m-goods', type=int, default=6)
    p.add_argument('--grid', type=int, default=100)
    p.add_argument('--no-zero', action='store_true', help='Draw values from [1/grid, 1]')
    p.add_argument('--case', choices=cases)
    p.add_argument('--zero-c', action='store_true')
    p.add_argument('--output')

    p = sub.add_parser('serve', help='Run the HTTP service')
    p.add_argument('--host', default='0.0.0.0', help='Host to bind to')
    p.add_argument('--port', type=int, default=5000, help='Port to bind to')
    return parser

def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        from config import ConfigError, config
    except Exception as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_INPUT

    try:
        settings = config.get_log_settings()
        hub = configure_logging(settings['service_name'], settings['log_file'], settings['bot_token'],
                                settings['chat_id'], verbose=args.verbose,
                                synchronous=args.command != 'serve')
        logger = hub.get_run_logger('cli')
        repository = ArtifactRepository(config.get_crash_dir())
        return COMMANDS[args.command](args, config, logger, repository)
    except (InputError, ConfigError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:
        print(f"\n❌ Fatal error: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        return EXIT_INTERNAL

if __name__ == '__main__':
    sys.exit(main())
