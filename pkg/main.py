import sys
import os
import logging
import traceback

# Ensure the current directory is in sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.append(current_dir)

try:
    from src.cli import run_cli
except Exception:
    print("FAILED TO IMPORT src.cli", file=sys.stderr)
    traceback.print_exc()
    sys.exit(1)

def main() -> None:
    try:
        status = run_cli(sys.argv[1:])
    except KeyboardInterrupt:
        status = 130
    except Exception as e:
        logging.getLogger("stray").critical("unexpected failure: %s", e)
        traceback.print_exc()
        status = 1
    sys.exit(status)

if __name__ == "__main__":
    main()
