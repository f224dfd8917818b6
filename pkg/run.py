import os
import sys

from pinewton import configure
from pinewton.cli import run

if __name__ == '__main__':
    configure(os.getenv('PINEWTON_ENV') or 'production')
    sys.exit(run(sys.argv[1:]))
