import importlib.util
import os
import shlex
import tempfile

import numpy as np
import yaml
from behave import *

from robust_topopt.analyzers import export_field, export_report, read_pgm, read_report
from robust_topopt.config import ConfigError, load_config_env, parse_config
from robust_topopt.models import ReportRow
from robust_topopt.runner import run

use_step_matcher("re")

SCRIPT = os.path.join(os.path.dirname(__file__), "..", "..", "scripts", "robust-topopt.py")


def _temp_dir(context) -> str:
    path = tempfile.mkdtemp(prefix="robust-topopt-")
    context.temp_dirs.append(path)
    return path


def _script():
    spec = importlib.util.spec_from_file_location("robust_topopt_script", SCRIPT)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _config_sources(context):
    if not hasattr(context.args, "overrides"):
        context.args.overrides = []
        context.args.preset = None
        context.args.config_path = None


@given(r"the preset (?P<preset>[\w-]+)")
def step_impl(context, preset):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    _config_sources(context)
    context.args.preset = preset


@given(r'the override "(?P<assignment>[^"]+)"')
def step_impl(context, assignment):
    _config_sources(context)
    context.args.overrides.append(assignment)


@given(r"a configuration file with the key nx repeated in the mesh section")
def step_impl(context):
    _config_sources(context)
    path = os.path.join(_temp_dir(context), "duplicate.yaml")
    with open(path, "w") as f:
        f.write("mesh:\n  nx: 10\n  ny: 5\n  nx: 20\n")
    context.args.config_path = path


@given(r"a configuration file setting the volume fraction to (?P<v>[\d.]+)")
def step_impl(context, v):
    _config_sources(context)
    path = os.path.join(_temp_dir(context), "volume.yaml")
    with open(path, "w") as f:
        yaml.safe_dump({"optimizer": {"volume_fraction": float(v)}}, f)
    context.args.config_path = path


@when(r"the configuration is resolved")
def step_impl(context):
    _config_sources(context)
    context.args.config = None
    context.args.error = None
    try:
        context.args.config = load_config_env(context.args.preset, context.args.config_path, context.args.overrides)
    except ConfigError as e:
        context.args.error = e


@then(r"the mesh is (?P<nx>\d+)x(?P<ny>\d+) elements on a (?P<width>[\d.]+) by (?P<height>[\d.]+) domain")
def step_impl(context, nx, ny, width, height):
    mesh = context.args.config.mesh
    assert (mesh.nx, mesh.ny, mesh.width, mesh.height) == (int(nx), int(ny), float(width), float(height)), mesh


@then(r"the load of (?P<magnitude>[\d.]+) acts in (?P<direction>[-+][xy]) between (?P<start>[\d.]+) "
      r"and (?P<end>[\d.]+)")
def step_impl(context, magnitude, direction, start, end):
    load = context.args.config.load
    assert (load.magnitude, load.direction, load.start, load.end) == (float(magnitude), direction, float(start),
                                                                      float(end)), load


@then(r"the volume fraction is (?P<v>[\d.]+) with penalty (?P<p>[\d.]+), filter radius (?P<radius>[\d.]+) "
      r"and degraded modulus (?P<e_d>[\d.]+)")
def step_impl(context, v, p, radius, e_d):
    config = context.args.config
    assert config is not None, context.args.error
    assert config.optimizer.volume_fraction == float(v)
    assert config.material.p == float(p)
    assert config.filter.radius == float(radius)
    assert config.material.E_D == float(e_d)
    assert config.optimizer.rho_min == 0.01


@then(r"the continuation mode is (?P<mode>off|check|optimize)")
def step_impl(context, mode):
    assert context.args.config.continuation.mode == mode


@then(r"the budgets are (?P<budgets>[\d., ]+)")
def step_impl(context, budgets):
    assert context.args.config is not None, context.args.error
    assert context.args.config.uncertainty.budgets == [float(b) for b in budgets.split(",")]
    assert context.args.config.continuation.mode == "off"


@then(r"the outer loop runs at most (?P<iterations>\d+) iterations")
def step_impl(context, iterations):
    assert context.args.config.optimizer.max_iter == int(iterations)


@then(r'a configuration error mentions "(?P<first>[^"]+)" and "(?P<second>[^"]+)"')
def step_impl(context, first, second):
    error = context.args.error
    assert error is not None, "configuration accepted"
    assert first in str(error) and second in str(error), str(error)


@when(r'the command line "(?P<line>[^"]*)" is parsed')
def step_impl(context, line):
    context.args.script = _script()
    context.args.arguments = vars(context.args.script.create_parser().parse_args(shlex.split(line)))


@then(r"the arguments are valid")
def step_impl(context):
    assert context.args.script.validate_args(context.args.arguments)


@then(r"the arguments are not valid")
def step_impl(context):
    assert not context.args.script.validate_args(context.args.arguments)


@then(r"the flag overrides are (?P<expected>.+)")
def step_impl(context, expected):
    expected = [item.strip().strip('"') for item in expected.split('", "')]
    assert context.args.script.flag_overrides(context.args.arguments) == expected


def _export(context, field, nx, ny, kind, e0=1.0):
    path = os.path.join(_temp_dir(context), "field.pgm")
    export_field(field, nx, ny, kind, path, e0=e0)
    context.args.field = np.asarray(field, dtype=float)
    context.args.pgm_path = path
    context.args.pgm_shape = (nx, ny)
    with open(path, "rb") as f:
        context.args.pgm = f.read()


@when(r"a (?P<nx>\d+)x(?P<ny>\d+) density field of (?P<value>[\d.]+) everywhere is exported")
def step_impl(context, nx, ny, value):
    nx, ny = int(nx), int(ny)
    _export(context, np.full(nx * ny, float(value)), nx, ny, "density")


@when(r"a (?P<nx>\d+)x(?P<ny>\d+) checkerboard density is exported")
def step_impl(context, nx, ny):
    nx, ny = int(nx), int(ny)
    e = np.arange(nx * ny)
    _export(context, ((e % nx + e // nx) % 2).astype(float), nx, ny, "density")


@when(r"a (?P<nx>\d+)x(?P<ny>\d+) effective modulus field of (?P<value>[\d.]+) everywhere is exported "
      r"with E0 (?P<e0>[\d.]+)")
def step_impl(context, nx, ny, value, e0):
    nx, ny = int(nx), int(ny)
    _export(context, np.full(nx * ny, float(value)), nx, ny, "effective-modulus", e0=float(e0))


def _pixels(context) -> np.ndarray:
    nx, ny = context.args.pgm_shape
    return np.frombuffer(context.args.pgm[-nx * ny:], dtype=np.uint8).reshape(ny, nx)


@then(r'the image header is "(?P<header>[^"]+)"')
def step_impl(context, header):
    header = header.encode("ascii").decode("unicode_escape").encode("ascii")
    assert context.args.pgm.startswith(header)
    nx, ny = context.args.pgm_shape
    assert len(context.args.pgm) == len(header) + nx * ny


@then(r"every pixel is (?P<level>\d+)")
def step_impl(context, level):
    assert np.all(_pixels(context) == int(level)), _pixels(context)


@then(r"the bottom-left element is the last row, first pixel of the image")
def step_impl(context):
    pixels = _pixels(context)
    assert context.args.field[0] == 0.0
    assert pixels[-1, 0] == 255
    assert pixels[-1, 1] == 0
    assert pixels[-2, 0] == 0


@then(r"reading the image back restores the field within 1/255")
def step_impl(context):
    field, nx, ny = read_pgm(context.args.pgm_path)
    assert (nx, ny) == context.args.pgm_shape
    assert np.max(np.abs(field - context.args.field)) <= 1.0 / 255.0


@when(r"an empty report is exported")
def step_impl(context):
    context.args.report_path = os.path.join(_temp_dir(context), "report.csv")
    export_report([], context.args.report_path)


@then(r'the report is "(?P<content>[^"]+)"')
def step_impl(context, content):
    with open(context.args.report_path) as f:
        assert f.read().strip() == content


@when(r"report rows for the budgets (?P<budgets>[\d., and]+) are exported")
def step_impl(context, budgets):
    values = [float(b) for b in budgets.replace(" and ", ",").split(",")]
    context.args.rows = [
        ReportRow(budget=b, compliance_reference=12.5 + b, wc_topo_reference_delta=1.25 * b,
                  nom_topo_worst_delta=100.0 * b, wc_topo_worst_delta=-0.5 + 50.0 * b)
        for b in values
    ]
    context.args.report_path = os.path.join(_temp_dir(context), "report.csv")
    export_report(context.args.rows, context.args.report_path)


def _report_path(context) -> str:
    if hasattr(context.args, "run_dir"):
        return os.path.join(context.args.run_dir, "report.csv")
    return context.args.report_path


@then(r"the report rows are ordered (?P<budgets>[\d., ]+)")
def step_impl(context, budgets):
    rows = read_report(_report_path(context))
    assert [row.budget for row in rows] == [float(b) for b in budgets.split(",")]


@then(r"reading the report back restores every value within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    rows = read_report(context.args.report_path)
    expected = sorted(context.args.rows, key=lambda row: row.budget)
    for row, original in zip(rows, expected):
        for name in ("budget", "compliance_reference", "wc_topo_reference_delta", "nom_topo_worst_delta",
                     "wc_topo_worst_delta"):
            assert abs(getattr(row, name) - getattr(original, name)) <= float(tol), name
        assert not row.has_continuation


def _run(context) -> str:
    _config_sources(context)
    directory = getattr(context.args, "prepared_dir", None) or _temp_dir(context)
    context.args.prepared_dir = None
    overrides = context.args.overrides + [f"output.directory={directory}"]
    config = load_config_env(context.args.preset, context.args.config_path, overrides)
    context.args.exit_code = run(config)
    return directory


@given(r"a directory already occupies the report.csv path of the run")
def step_impl(context):
    context.args.prepared_dir = _temp_dir(context)
    os.makedirs(os.path.join(context.args.prepared_dir, "report.csv"))


@when(r"the run is executed")
def step_impl(context):
    context.args.run_dir = _run(context)


@when(r"the run is executed twice")
def step_impl(context):
    context.args.run_dirs = [_run(context), _run(context)]


@then(r"the run exits with (?P<code>\d+)")
def step_impl(context, code):
    assert context.args.exit_code == int(code), context.args.exit_code


def _names(text: str):
    return [name.strip() for name in text.replace(" and ", ",").split(",") if name.strip()]


@then(r"the run directory holds (?P<names>[\w., ]+)")
def step_impl(context, names):
    for name in _names(names):
        assert os.path.isfile(os.path.join(context.args.run_dir, name)), name


@then(r"the directory (?P<directory>D=[\d.]+) holds (?P<names>[\w., ]+)")
def step_impl(context, directory, names):
    for name in _names(names):
        assert os.path.isfile(os.path.join(context.args.run_dir, directory, name)), name


@then(r"the iteration log of (?P<directory>D=[\d.]+) has at most (?P<lines>\d+) lines")
def step_impl(context, directory, lines):
    with open(os.path.join(context.args.run_dir, directory, "iterations.log")) as f:
        records = [line.split() for line in f if line.strip()]
    assert 0 < len(records) <= int(lines)
    assert all(len(record) == 5 for record in records)


@then(r"the run metadata reports (?P<status>.+)")
def step_impl(context, status):
    with open(os.path.join(context.args.run_dir, "meta.txt")) as f:
        meta = yaml.safe_load(f)
    assert meta["status"] == status, meta["status"]
    assert meta["config"]["preset"] == context.args.preset


@then(r"the report has (?P<count>\d+) rows?")
def step_impl(context, count):
    assert len(read_report(_report_path(context))) == int(count)


@then(r"both reports are byte-identical")
def step_impl(context):
    contents = []
    for directory in context.args.run_dirs:
        with open(os.path.join(directory, "report.csv"), "rb") as f:
            contents.append(f.read())
    assert contents[0] == contents[1]
    assert len(contents[0].splitlines()) == 2


@then(r"parsing the file with the same preset and override gives the same configuration")
def step_impl(context):
    config = parse_config(context.args.config_path, context.args.overrides, preset=context.args.preset)
    assert config == context.args.config
