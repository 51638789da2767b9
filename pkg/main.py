import argparse
import sys
from config import Config
from harness.checks import CHECKS, cli_check
from harness.experiment_config import parse_assignments, parse_value
from harness.runner import cli_run
from harness.sweep import cli_sweep
from utils.errors import ConfigurationError
from utils.logger import Logger


def build_parser():
    parser = argparse.ArgumentParser(prog='rtrl-lab', description="Online learning experiments for dynamical systems")
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="Run every arm and seed of an experiment config")
    run.add_argument('config')
    run.add_argument('--seed', type=int, nargs='+', help="Seeds to run instead of the config's seeds")
    run.add_argument('--set', action='append', metavar='KEY=VALUE', help="Dotted config override")
    run.add_argument('--force', action='store_true', help="Run even when exponent constraints are violated")
    run.add_argument('--jobs', type=int, default=1)
    run.add_argument('--output', help="Output root (default: $RTRL_OUTPUT_ROOT)")

    sweep = sub.add_parser('sweep', help="Aggregate final distances over a parameter grid")
    sweep.add_argument('config')
    sweep.add_argument('--grid', action='append', metavar='KEY=JSON_LIST', help="Grid axis, e.g. schedule.b=[0.3,0.7]")
    sweep.add_argument('--set', action='append', metavar='KEY=VALUE')
    sweep.add_argument('--seed', type=int, nargs='+')
    sweep.add_argument('--force', action='store_true')
    sweep.add_argument('--jobs', type=int, default=1)
    sweep.add_argument('--output')

    check = sub.add_parser('check', help="Check hypotheses: " + ', '.join(CHECKS))
    check.add_argument('check', choices=CHECKS)
    check.add_argument('--config', help="Experiment config (stability, optimum)")
    check.add_argument('--set', action='append', metavar='KEY=VALUE')
    check.add_argument('--class', dest='algorithm_class', default='exact')
    check.add_argument('--a', type=float, default=0.0)
    check.add_argument('--gamma', type=float, default=0.0)
    check.add_argument('--b', type=float)
    check.add_argument('--A', type=float)
    check.add_argument('--h', type=float, help="Moment order for the pure online rate range")
    check.add_argument('--T', type=int)
    check.add_argument('--k-max', dest='k_max', type=int)
    check.add_argument('--epoch', type=int)
    check.add_argument('--aux', type=parse_value, help="JSON list of auxiliary statistics appended to theta*")
    check.add_argument('--reducer', default='uoro', choices=('uoro', 'nobacktrack'))
    check.add_argument('--dim', type=int, default=2)
    check.add_argument('--p', type=int, default=3)
    check.add_argument('--steps', type=int, default=1)
    check.add_argument('--seed', type=int, default=0)
    check.add_argument('--output')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    Config.create_directories()
    logger = Logger()
    try:
        overrides = parse_assignments(args.set)
        if args.command == 'run':
            return cli_run(args.config, overrides, args.seed, args.force, args.jobs, args.output)
        if args.command == 'sweep':
            if args.seed:
                overrides['seeds'] = args.seed
            return cli_sweep(args.config, overrides, parse_assignments(args.grid), args.force, args.jobs,
                             args.output)
        options = vars(args).copy()
        options['overrides'] = overrides
        if args.check in ('stability', 'optimum') and not args.config:
            raise ConfigurationError(f"check {args.check} needs --config")
        return cli_check(args.check, options)
    except ConfigurationError as e:
        logger.log(f"Configuration error: {e}", 'ERROR')
        print(f"error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
