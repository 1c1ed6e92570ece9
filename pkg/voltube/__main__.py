"""
Shortcut for the experiment driver: ``python -m voltube <subcommand> ...``
is the same as ``python manage.py voltube <subcommand> ...``.
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'voltube.settings')
    from django.core.management import execute_from_command_line

    execute_from_command_line([sys.argv[0], 'voltube', *sys.argv[1:]])


if __name__ == '__main__':
    main()
