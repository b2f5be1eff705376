# crn_osc/main.py

from crn_osc.config import config
from crn_osc.routers.commands import cli


def main():
    config.ensure_directories_exist()
    cli(obj={})


if __name__ == "__main__":
    main()
