import logging
import shutil
from types import SimpleNamespace


def before_all(context):
    logging.basicConfig(level=logging.WARNING, format="%(asctime)s %(name)20s %(levelname)8s:%(message)s")


def before_scenario(context, scenario):
    context.args = SimpleNamespace()
    context.temp_dirs = []


def after_scenario(context, scenario):
    for path in context.temp_dirs:
        shutil.rmtree(path, ignore_errors=True)
