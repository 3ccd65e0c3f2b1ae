import pytest
from fastapi.testclient import TestClient

from cpakit.service import app
from cpakit.service.handlers import plan_checkpoints
from cpakit.traceio import read_traceset

client = TestClient(app)


def test_default_checkpoints_clip_to_trace_count():
    kept, clipped = plan_checkpoints(None, 400)
    assert kept == [50, 100, 200, 300, 400]
    assert clipped == [500, 600]


def test_all_clipped_falls_back_to_trace_count():
    kept, clipped = plan_checkpoints(None, 30)
    assert kept == [30]
    assert clipped == [50, 100, 200, 300, 400, 500, 600]


def test_checkpoints_are_sorted_and_deduplicated():
    kept, clipped = plan_checkpoints([40, 10, 40, 20], 100)
    assert kept == [10, 20, 40]
    assert clipped == []
    with pytest.raises(ValueError, match=">= 1"):
        plan_checkpoints([0, 10], 100)

SIM_BODY = {
    "key": "000102030405060708090a0b0c0d0e0f",
    "plaintexts": 40,
    "seed": 3,
    "embed_key": True,
    "samples": 300,
    "trigger_index": 30,
    "byte_spacing": 15,
    "sbox_offset": 6,
    "repeats": 1,
}


@pytest.fixture()
def trace_file(tmp_path):
    out = tmp_path / "campaign.trc"
    body = dict(SIM_BODY, out=str(out))
    reply = client.post("/simulate", json=body)
    assert reply.status_code == 200, reply.text
    return out, reply.json()


def test_health():
    reply = client.get("/health")
    assert reply.status_code == 200
    assert reply.json() == {"status": "ok"}


def test_simulate_writes_the_campaign(trace_file):
    out, payload = trace_file
    assert payload["num_records"] == 40
    assert payload["key"] == SIM_BODY["key"]
    assert payload["embedded_key"] is True
    ts = read_traceset(out)
    assert ts.num_traces == 40
    assert ts.key_under_test == bytes.fromhex(SIM_BODY["key"])


def test_simulate_random_key_is_seed_deterministic(tmp_path):
    a = client.post("/simulate", json={"plaintexts": 5, "seed": 9, "samples": 300,
                                       "trigger_index": 30, "byte_spacing": 15,
                                       "sbox_offset": 6, "repeats": 1,
                                       "out": str(tmp_path / "a.trc")}).json()
    b = client.post("/simulate", json={"plaintexts": 5, "seed": 9, "samples": 300,
                                       "trigger_index": 30, "byte_spacing": 15,
                                       "sbox_offset": 6, "repeats": 1,
                                       "out": str(tmp_path / "b.trc")}).json()
    assert a["key"] == b["key"]
    assert (tmp_path / "a.trc").read_bytes() == (tmp_path / "b.trc").read_bytes()


def test_simulate_rejects_malformed_key(tmp_path):
    body = dict(SIM_BODY, key="zz", out=str(tmp_path / "x.trc"))
    reply = client.post("/simulate", json=body)
    assert reply.status_code == 400
    assert "hex" in reply.json()["detail"]


def test_simulate_rejects_nonpositive_plaintexts(tmp_path):
    body = dict(SIM_BODY, plaintexts=0, out=str(tmp_path / "x.trc"))
    assert client.post("/simulate", json=body).status_code == 422


def test_attack_recovers_embedded_key(trace_file):
    out, _ = trace_file
    reply = client.post("/attack", json={"in": str(out), "model": "sbox-hw"})
    assert reply.status_code == 200
    payload = reply.json()
    assert payload["verdict"] == "recovered"
    assert payload["best_key"] == SIM_BODY["key"]
    assert payload["ground_truth"]["rank1_count"] == 16
    assert len(payload["per_byte"]) == 16
    assert len(payload["per_byte"][0]["top"]) == 10


def test_attack_xor_model_reports_complement_metric(trace_file):
    out, _ = trace_file
    payload = client.post("/attack", json={"in": str(out), "model": "xor-hw", "top": 2}).json()
    assert payload["ground_truth"]["complement_rank1_count"] == 16


def test_attack_without_embedded_key_has_no_verdict(tmp_path):
    out = tmp_path / "anon.trc"
    body = dict(SIM_BODY, embed_key=False, out=str(out))
    client.post("/simulate", json=body)
    payload = client.post("/attack", json={"in": str(out)}).json()
    assert payload["verdict"] == "no-ground-truth"
    assert payload["ground_truth"] is None


def test_attack_missing_file_is_404():
    reply = client.post("/attack", json={"in": "/nonexistent/file.trc"})
    assert reply.status_code == 404


def test_attack_corrupt_file_is_400(tmp_path):
    bad = tmp_path / "bad.trc"
    bad.write_bytes(b"not a trace file at all")
    reply = client.post("/attack", json={"in": str(bad)})
    assert reply.status_code == 400
    assert "magic" in reply.json()["detail"]


def test_attack_unknown_model_is_422(trace_file):
    out, _ = trace_file
    assert client.post("/attack", json={"in": str(out), "model": "dpa"}).status_code == 422


def test_evolve_exports_rows(trace_file, tmp_path):
    out, _ = trace_file
    csv_path = tmp_path / "evo.csv"
    reply = client.post(
        "/evolve",
        json={"in": str(out), "model": "sbox-hw", "checkpoints": [10, 20, 40],
              "out": str(csv_path), "format": "csv"},
    )
    assert reply.status_code == 200
    payload = reply.json()
    assert payload["checkpoints"] == [10, 20, 40]
    assert payload["rows"] == 16 * 3 * 256
    assert csv_path.exists()


def test_evolve_clips_oversized_checkpoints(trace_file, tmp_path):
    out, _ = trace_file
    reply = client.post(
        "/evolve",
        json={"in": str(out), "checkpoints": [10, 999], "out": str(tmp_path / "e.csv")},
    )
    payload = reply.json()
    assert payload["checkpoints"] == [10]
    assert payload["clipped"] == [999]


def test_inspect_reports_dimensions(trace_file):
    out, _ = trace_file
    payload = client.post("/inspect", json={"in": str(out)}).json()
    assert payload["num_records"] == 40
    assert payload["samples_per_trace"] == 300
    assert payload["has_ground_truth_key"] is True
    assert payload["sample_mean"] == pytest.approx(5.0, abs=0.1)


def test_inspect_flat_file_has_near_zero_std(tmp_path):
    out = tmp_path / "flat.trc"
    body = dict(SIM_BODY, leak_coeff=0.0, out=str(out))
    client.post("/simulate", json=body)
    payload = client.post("/inspect", json={"in": str(out)}).json()
    assert payload["sample_std"] == pytest.approx(0.0, abs=1e-9)
