"""Shared paths and helpers for the model-server test suite."""

import json
from contextlib import contextmanager
from pathlib import Path

import jsonschema

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parents[1]
CONTRACTS_DIR = REPO_ROOT / "contracts"
PRIMARY_DATA_DIR = REPO_ROOT / "tests" / "data"


def load_schema(name):
    path = CONTRACTS_DIR / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


def load_example(name):
    path = CONTRACTS_DIR / "examples" / f"{name}.json"
    return json.loads(path.read_text(encoding="utf-8"))


def assert_valid(payload, schema_name):
    jsonschema.validate(payload, load_schema(schema_name))


def write_record(root, doc_id, field, text, confidence=1.0,
                 proposals=None):
    doc_dir = Path(root) / doc_id
    doc_dir.mkdir(parents=True, exist_ok=True)
    record = {"text": text, "confidence": confidence}
    if proposals is not None:
        record["proposals"] = proposals
    path = doc_dir / f"{field}.json"
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def recognize_body(doc_id, field, **overrides):
    body = {"doc_id": doc_id, "field": field, "patch_b64": "",
            "max_length": 32, "beam_count": 4, "no_repeat_ngram": 3,
            "length_penalty": 2.0}
    body.update(overrides)
    return body


@contextmanager
def criterion(name, capsys):
    """Announce the verdict for one acceptance criterion."""
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    else:
        with capsys.disabled():
            print(f"[ACCEPTANCE] {name}: PASS")
