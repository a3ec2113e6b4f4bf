"""Command-line entry point: ``bench {run,reconstruct,solve,make-instance,sweep-nu}``"""

import argparse
import asyncio
import logging
import sys
from typing import Any, Dict, List, Optional

from .bench import ExperimentConfig, Suite, SuiteResult, async_run_suite, parse_config, run_nu_sweep, run_suite
from .const import DEFAULT_LAMBDA, DEFAULT_NOISE_SIGMA
from .exc import BdrConfigError, BdrError
from .generators import dump_instance, make_case_instance

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SOLVER_ERROR = 1
EXIT_CONFIG_ERROR = 2


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {text!r}')


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='flat JSON config file; flags override its values')
    parser.add_argument('--seed', dest='seed_base', type=int, help='base seed for per-run seeds')
    parser.add_argument('--tol', type=float, help='relative-change stopping tolerance')
    parser.add_argument('--max-iter', dest='max_iter', type=int, help='iteration cap per run')
    parser.add_argument('--nu', type=float, help='relaxation parameter in (0, 2)')
    parser.add_argument('--tau', type=float, help='dual step parameter')
    parser.add_argument('--lambda', dest='lam', type=float, help='regularization weight')
    parser.add_argument('--threads', type=int, help='worker threads for independent runs')
    parser.add_argument('--runs', type=int, help='seeded repetitions per case')
    parser.add_argument('--gamma-mode', dest='gamma_mode', choices=['theory', 'heuristic'])
    parser.add_argument('--baseline', action='store_true', default=None, help='also run the proximal DCA baseline')
    parser.add_argument('--extrapolate', action='store_true', default=None, help='baseline with momentum')
    parser.add_argument('--lyapunov', dest='track_lyapunov', action='store_true', default=None,
                        help='record the merit function in traces')
    parser.add_argument('--no-traces', dest='write_traces', action='store_false', default=None)
    parser.add_argument('--out', dest='output_dir', help='report directory')
    parser.add_argument('-v', '--verbose', action='store_true')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='bench', description='Splitting solver benchmarks for sparse recovery')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='sensing-matrix test cases')
    run.add_argument('--suite', default=None, help='gaussian, pdct or signal (or the full suite names)')
    run.add_argument('--cases', dest='case_ids', help='comma-separated case ids')
    run.add_argument('--scale', type=float, help='uniform down-scaling of m, d and s')
    run.add_argument('--signal', dest='signal_path', help='signal CSV for the signal suite')
    _add_common(run)

    sweep = sub.add_parser('sweep-nu', help='repeat a suite for several relaxation parameters')
    sweep.add_argument('--nus', type=_float_list, default=[1.0, 1.2, 1.4, 1.6, 1.8])
    sweep.add_argument('--suite', default=None)
    sweep.add_argument('--cases', dest='case_ids')
    sweep.add_argument('--scale', type=float)
    _add_common(sweep)

    recon = sub.add_parser('reconstruct', help='recover a signal from a random subset of its samples')
    recon.add_argument('--signal', dest='signal_path', help='signal CSV; synthetic signals when omitted')
    recon.add_argument('--rate', dest='sampling_rate', type=float, help='fraction of samples observed')
    recon.add_argument('--cases', dest='case_ids')
    recon.add_argument('--scale', type=float)
    recon.add_argument('--signal-kind', dest='signal_kind', choices=['smooth_sinusoid', 'piecewise_load'])
    _add_common(recon)

    solve = sub.add_parser('solve', help='solve one dumped instance')
    solve.add_argument('--instance', dest='instance_path', required=True)
    _add_common(solve)

    make = sub.add_parser('make-instance', help='dump one seeded test-case instance')
    make.add_argument('--case', type=int, required=True)
    make.add_argument('--seed', type=int, default=0)
    make.add_argument('--scale', type=float, default=1.0)
    make.add_argument('--lambda', dest='lam', type=float, default=DEFAULT_LAMBDA)
    make.add_argument('--sigma', type=float, default=DEFAULT_NOISE_SIGMA)
    make.add_argument('--out', required=True, help='output file')
    make.add_argument('-v', '--verbose', action='store_true')
    return parser


CONFIG_FLAGS = ('seed_base', 'tol', 'max_iter', 'nu', 'tau', 'lam', 'threads', 'runs', 'gamma_mode', 'baseline',
                'extrapolate', 'track_lyapunov', 'write_traces', 'output_dir', 'case_ids', 'scale', 'signal_path',
                'sampling_rate', 'signal_kind', 'instance_path', 'suite')


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {key: getattr(args, key) for key in CONFIG_FLAGS if hasattr(args, key)}
    if args.command == 'reconstruct':
        overrides['suite'] = Suite.RECONSTRUCTION
    elif args.command == 'solve':
        overrides['suite'] = Suite.SINGLE
        if overrides.get('runs') is None:
            overrides['runs'] = 1
    return overrides


def _execute(config: ExperimentConfig) -> SuiteResult:
    if config.threads > 1:
        return asyncio.run(async_run_suite(config))
    return run_suite(config)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        if args.command == 'make-instance':
            instance = make_case_instance(args.case, args.seed, args.scale, args.lam, args.sigma)
            dump_instance(instance, args.out)
            _LOGGER.info('Wrote case %d (%dx%d) to %s', args.case, instance.m, instance.d, args.out)
            return EXIT_OK
        config = parse_config(args.config, _overrides(args))
        if args.command == 'sweep-nu':
            runner = (lambda c: asyncio.run(async_run_suite(c))) if config.threads > 1 else run_suite
            result = run_nu_sweep(config, args.nus, runner=runner)
        else:
            result = _execute(config)
    except BdrConfigError as exc:
        _LOGGER.error('Invalid configuration: %s', exc)
        return EXIT_CONFIG_ERROR
    except BdrError as exc:
        _LOGGER.error('%s', exc)
        return EXIT_SOLVER_ERROR
    print(result.summary().to_string(index=False))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
