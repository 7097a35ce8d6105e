#!/usr/bin/env python3
"""Validate recorded backend exchanges against the wire schemas.

Successful exchanges must match their request and response schemas. Error
exchanges carry a request that the endpoint's request schema rejects.
"""
import json
import pathlib
import sys

import jsonschema


def main(schema_dir: str, fixtures: str) -> int:
    schemas = {}
    for path in pathlib.Path(schema_dir).glob("*.json"):
        schema = json.loads(path.read_text())
        jsonschema.Draft7Validator.check_schema(schema)
        schemas[path.stem] = jsonschema.Draft7Validator(schema)

    exchanges = [json.loads(line) for line in pathlib.Path(fixtures).read_text().splitlines() if line.strip()]
    by_path = {e["path"]: e["request_schema"] for e in exchanges if e["status"] == 200}
    failures = 0
    for e in exchanges:
        try:
            if e["status"] == 200:
                schemas[e["request_schema"]].validate(e["request"])
                schemas[e["response_schema"]].validate(e["response"])
            elif schemas[by_path[e["path"]]].is_valid(e["request"]):
                raise jsonschema.ValidationError(f"error case accepted by {by_path[e['path']]}")
            else:
                schemas[e["response_schema"]].validate({"error": "example"})
        except (jsonschema.ValidationError, KeyError) as err:
            failures += 1
            print(f"FAIL {e.get('name')}: {err}")
    print(f"{len(exchanges) - failures}/{len(exchanges)} exchanges conform")
    return 1 if failures else 0


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: check_fixtures.py SCHEMA_DIR EXCHANGES_JSONL")
    sys.exit(main(sys.argv[1], sys.argv[2]))
