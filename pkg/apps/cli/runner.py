"""
Dispatcher behind ``python -m apps.cli <subcommand> [flags]``.

Subcommands map onto the app's management commands; ``check`` runs the
``verify`` command since Django reserves ``check`` for its system checks.
"""
import logging
import sys

from django.core.management import load_command_class
from django.core.management.base import CommandError

logger = logging.getLogger(__name__)

PROG = 'python -m apps.cli'
SUBCOMMANDS = {
    'simulate': 'simulate',
    'average': 'average',
    'rate': 'rate',
    'laplace': 'laplace',
    'hjb': 'hjb',
    'check': 'verify',
    'validate': 'validate',
}


def usage():
    return (f"usage: {PROG} {{{','.join(SUBCOMMANDS)}}} [--config PATH] [--out DIR] [--seed U64] "
            f"[--threads N] [--override KEY=VALUE]\n")


def run_command(argv, stdout=None, stderr=None):
    """Run one subcommand; returns the exit code (0 ok, 1 usage/config, 2 failed validation)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(argv)
    if not argv or argv[0] in ('-h', '--help'):
        (stdout if argv else stderr).write(usage())
        return 0 if argv else 1
    name = argv[0]
    if name not in SUBCOMMANDS:
        stderr.write(usage())
        stderr.write(f"error: unknown subcommand {name!r}\n")
        return 1

    command = load_command_class('apps.cli', SUBCOMMANDS[name])
    parser = command.create_parser(PROG, name)
    try:
        options = vars(parser.parse_args(argv[1:]))
    except CommandError as exc:
        stderr.write(parser.format_usage())
        stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:
        return exc.code or 0
    args = options.pop('args', ())
    options.update(stdout=stdout, stderr=stderr, skip_checks=True)
    try:
        command.execute(*args, **options)
    except CommandError as exc:
        stderr.write(f"error: {exc}\n")
        return exc.returncode
    return 0
