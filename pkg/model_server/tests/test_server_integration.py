"""End-to-end: the toolkit CLI drives a live server over HTTP.

The ground-truth store is built here by reading the toolkit's annotation
fixtures directly (LabelMe-shaped JSON), so the two packages only meet
through public artifacts: the wire protocol, the record file layout, and
the command line.
"""

import json
import os
import shutil
import socket
import subprocess
import sys
import threading
import time

import pytest
import requests
import uvicorn
from server_support import (
    PRIMARY_DATA_DIR,
    assert_valid,
    criterion,
    load_example,
    write_record,
)

from model_server.app import create_app
from model_server.config import NoiseParams, ServerConfig


def field_label(display: str) -> str:
    return display.lower().replace(" ", "_")


def build_truth_store(root):
    """One record per annotated field, with its box as a proposal."""
    documents = 0
    for path in sorted((PRIMARY_DATA_DIR / "annotations").glob("*.json")):
        payload = json.loads(path.read_text(encoding="utf-8"))
        documents += 1
        for shape in payload["shapes"]:
            xs = [point[0] for point in shape["points"]]
            ys = [point[1] for point in shape["points"]]
            label = field_label(shape["label"])
            assert shape["description"], f"{path.name}: blank {label}"
            write_record(
                root, path.stem, label, shape["description"], 1.0,
                proposals=[{"field": label, "x_min": min(xs),
                            "y_min": min(ys), "x_max": max(xs),
                            "y_max": max(ys), "score": 0.97}])
    assert documents == 6
    return root


def free_port() -> int:
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


class LiveServer:
    """Uvicorn in a daemon thread, gated through /healthz.

    With ``expect_ready`` the gate waits for a 200; otherwise any HTTP
    answer counts, so deliberately not-ready servers can be exercised.
    """

    def __init__(self, app, expect_ready=True):
        self.port = free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        self._expect_ready = expect_ready
        self._server = uvicorn.Server(uvicorn.Config(
            app, host="127.0.0.1", port=self.port, log_level="warning"))
        self._thread = threading.Thread(target=self._server.run,
                                        daemon=True)

    def __enter__(self):
        self._thread.start()
        deadline = time.monotonic() + 20
        while True:
            try:
                status = requests.get(f"{self.url}/healthz",
                                      timeout=1).status_code
                if status == 200 or not self._expect_ready:
                    return self
            except requests.RequestException:
                pass
            if time.monotonic() > deadline:
                raise RuntimeError("server did not come up")
            time.sleep(0.05)

    def __exit__(self, *exc_info):
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """Copied toolkit fixture corpus, switched to process every split."""
    root = tmp_path_factory.mktemp("corpus")
    data = root / "data"
    shutil.copytree(PRIMARY_DATA_DIR, data)
    config_path = data / "config.json"
    config = json.loads(config_path.read_text(encoding="utf-8"))
    config["run_split"] = "all"
    config_path.write_text(json.dumps(config, indent=2) + "\n",
                           encoding="utf-8")
    truth = build_truth_store(root / "truth")
    return {"config": config_path, "truth": truth, "root": root}


def run_cli(config_path, out_dir, url):
    env = dict(os.environ, DOCFORGE_BACKEND_URL=url)
    return subprocess.run(
        [sys.executable, "-m", "docforge", "run", "--config",
         str(config_path), "--backend", "remote", "--out", str(out_dir)],
        capture_output=True, text=True, env=env, timeout=120)


def test_zero_noise_round_trip(corpus, capsys):
    with criterion("model server protocol conformance and zero-noise "
                   "integration", capsys):
        app = create_app(ServerConfig(truth_dir=corpus["truth"]))
        with LiveServer(app) as server:
            health = requests.get(f"{server.url}/healthz", timeout=5)
            assert_valid(health.json(), "healthz_response")

            recognized = requests.post(
                f"{server.url}/recognize",
                json=load_example("recognize_request"), timeout=5)
            assert recognized.status_code == 200
            assert_valid(recognized.json(), "recognize_response")
            assert recognized.json() == {"text": "2019",
                                         "confidence": 1.0}

            detected = requests.post(
                f"{server.url}/detect",
                json={"doc_id": "doc01", "image_b64": ""}, timeout=5)
            assert detected.status_code == 200
            assert_valid(detected.json(), "detect_response")
            assert len(detected.json()["proposals"]) == 4

            out_dir = corpus["root"] / "reports_clean"
            result = run_cli(corpus["config"], out_dir, server.url)
        assert result.returncode == 0, result.stderr

        report = json.loads(
            (out_dir / "run_report.json").read_text(encoding="utf-8"))
        assert report["document_count"] == 6
        assert report["failures"] == []
        assert report["ocr"]["before"]["overall"]["cer"] == 0.0
        assert report["ocr"]["after"]["overall"]["cer"] == 0.0
        assert report["ocr"]["after"]["overall"]["wer"] == 0.0
        assert report["correction_log"] == []
        assert report["implausible_years"] == []
        assert report["detection"]["mean_average_precision"] == 1.0
        assert report["detection"]["micro"]["f1"] == 1.0


def test_noisy_round_trip_still_completes(corpus):
    app = create_app(ServerConfig(
        truth_dir=corpus["truth"],
        noise=NoiseParams(substitution_rate=0.15, deletion_rate=0.05,
                          seed=4)))
    out_dir = corpus["root"] / "reports_noisy"
    with LiveServer(app) as server:
        result = run_cli(corpus["config"], out_dir, server.url)
    assert result.returncode == 0, result.stderr

    report = json.loads(
        (out_dir / "run_report.json").read_text(encoding="utf-8"))
    assert report["document_count"] == 6
    assert report["ocr"]["before"]["overall"]["cer"] > 0.0
    # noise leaves boxes alone, so detection stays perfect
    assert report["detection"]["mean_average_precision"] == 1.0


def test_unready_server_stops_the_run(corpus, tmp_path):
    app = create_app(ServerConfig(truth_dir=corpus["root"] / "missing"))
    out_dir = tmp_path / "reports"
    with LiveServer(app, expect_ready=False) as server:
        health = requests.get(f"{server.url}/healthz", timeout=5)
        assert health.status_code == 503
        assert_valid(health.json(), "error_response")
        result = run_cli(corpus["config"], out_dir, server.url)
    assert result.returncode == 2  # backend failure, before any document
    assert not (out_dir / "run_report.json").exists()
