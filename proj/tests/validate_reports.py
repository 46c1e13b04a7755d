"""Runs quasifeff with --format json and validates each report against the shipped schemas."""

import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource

exe, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])

resources = {}
for path in schema_dir.glob("*.schema.json"):
    doc = json.loads(path.read_text())
    resources[doc["$id"]] = Resource.from_contents(doc)
registry = Registry().with_resources(resources.items())


def validator(name):
    schema = resources[name].contents
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema, registry=registry)


runs = [
    ("curvature_report.schema.json", ["curvature", "--structure", "heisenberg", "--P", "1", "--x", "0", "--H", "0"], 0),
    ("curvature_report.schema.json", ["curvature", "--P", "1 + x1/4", "--samples", "2"], 0),
    ("check_report.schema.json", ["check", "--structure", "heisenberg", "--psi", "1", "--samples", "5", "--seed", "7"], 0),
    ("check_report.schema.json", ["check", "--structure", "heisenberg", "--P", "1+0.1*r"], 1),
    ("invariance_report.schema.json", ["invariance", "--gauge-tau", "0.3", "--gauge-theta", "-0.7", "--samples", "10"], 0),
    ("invariance_report.schema.json", ["invariance", "--gauge-tau", "x1/3", "--fefferman"], 0),
]

failures = 0
for schema, args, code in runs:
    proc = subprocess.run([exe, *args, "--format", "json"], capture_output=True, text=True)
    if proc.returncode != code:
        print(f"FAIL {' '.join(args)}: exit {proc.returncode}, expected {code}\n{proc.stderr}")
        failures += 1
        continue
    report = json.loads(proc.stdout)
    errors = list(validator(schema).iter_errors(report))
    for e in errors:
        print(f"FAIL {' '.join(args)}: {e.message} at {list(e.absolute_path)}")
    failures += bool(errors)
    if not errors:
        print(f"ok   {' '.join(args)}")

# a malformed report must be rejected
bad = {"command": "check", "checks": [], "branch": "maybe"}
if validator("check_report.schema.json").is_valid(bad):
    print("FAIL malformed report accepted")
    failures += 1

sys.exit(1 if failures else 0)
