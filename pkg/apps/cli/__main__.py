import os
import sys

import django


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    django.setup()
    from apps.cli.runner import run_command

    sys.exit(run_command(sys.argv[1:]))


if __name__ == '__main__':
    main()
