import json
import os
import subprocess
import sys

import numpy as np
import pytest

from simgen import (
    EmbeddingRecord,
    SimgenError,
    cosine_matrix,
    embed,
    loss_matrix,
    similarity_payload,
    write_similarity,
)


class TestEmbed:
    def test_identical_strings_identical_vectors(self):
        records = embed(["open the gate", "open the gate"])
        assert np.array_equal(records[0].vector, records[1].vector)

    def test_empty_list_rejected(self):
        with pytest.raises(SimgenError, match="no messages"):
            embed([])

    def test_empty_message_rejected(self):
        with pytest.raises(SimgenError, match="empty message"):
            embed(["fine", "   "])

    def test_related_pair_scores_higher_than_unrelated(self):
        records = embed(
            [
                "turn left at the next junction",
                "turn right at the next junction",
                "quarterly revenue exceeded expectations",
            ]
        )
        phi = cosine_matrix(records)
        assert phi[0, 1] > phi[0, 2]
        assert phi[0, 1] > phi[1, 2]

    def test_deterministic_across_calls(self):
        a = embed(["alpha beta", "gamma delta"])
        b = embed(["alpha beta", "gamma delta"])
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.vector, rb.vector)

    def test_vectors_finite_and_nonzero(self):
        for r in embed(["x", "yy", "a longer message with words"]):
            assert np.all(np.isfinite(r.vector))
            assert np.any(r.vector)


class TestMatrix:
    def test_duplicate_messages_zero_loss(self):
        records = embed(["ship it", "ship it", "hold the release"])
        a = loss_matrix(records)
        assert a[0, 1] == 0.0 and a[1, 0] == 0.0

    def test_orthogonal_embeddings_loss_one(self):
        records = [
            EmbeddingRecord("a", np.array([1.0, 0.0])),
            EmbeddingRecord("b", np.array([0.0, 1.0])),
        ]
        a = loss_matrix(records)
        assert a[0, 1] == 1.0

    def test_negative_cosine_clamped_raw_preserved(self):
        records = [
            EmbeddingRecord("a", np.array([1.0, 0.0])),
            EmbeddingRecord("b", np.array([-1.0, 0.0])),
        ]
        payload = similarity_payload(records, model="unit-test@0")
        assert payload["A"][0][1] == 1.0
        assert payload["provenance"]["raw_cosine"][0][1] == pytest.approx(-1.0)

    def test_matrix_contract(self):
        records = embed(["one", "two", "three", "four"])
        a = loss_matrix(records)
        assert np.array_equal(a, a.T)
        assert np.all(np.diagonal(a) == 0.0)
        assert a.min() >= 0.0 and a.max() <= 1.0

    def test_single_record_rejected(self):
        with pytest.raises(SimgenError, match="at least 2"):
            loss_matrix(embed(["only one"]))


class TestCli:
    def run_cli(self, *args, env_extra=None):
        env = dict(os.environ)
        if env_extra:
            env.update(env_extra)
        return subprocess.run(
            [sys.executable, "-m", "simgen", *map(str, args)],
            capture_output=True,
            text=True,
            env=env,
        )

    def test_happy_path(self, tmp_path):
        msgs = tmp_path / "messages.txt"
        msgs.write_text("turn left\nturn right\nstop now\nproceed slowly\n")
        out = tmp_path / "similarity.json"
        res = self.run_cli("--messages", msgs, "--out", out)
        assert res.returncode == 0, res.stderr
        data = json.loads(out.read_text())
        assert data["schema"] == 1 and data["M"] == 4
        assert data["provenance"]["model"] == "hashed-ngram@1"

    def test_byte_reproducible(self, tmp_path):
        msgs = tmp_path / "messages.txt"
        msgs.write_text("alpha\nbeta\ngamma\n")
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert self.run_cli("--messages", msgs, "--out", out).returncode == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_too_few_messages_exit_2(self, tmp_path):
        msgs = tmp_path / "messages.txt"
        msgs.write_text("only one line\n")
        res = self.run_cli("--messages", msgs, "--out", tmp_path / "x.json")
        assert res.returncode == 2

    def test_missing_file_exit_2(self, tmp_path):
        res = self.run_cli("--messages", tmp_path / "nope.txt", "--out", tmp_path / "x.json")
        assert res.returncode == 2

    def test_unavailable_model_exit_3(self, tmp_path):
        msgs = tmp_path / "messages.txt"
        msgs.write_text("a few\nwords here\n")
        res = self.run_cli(
            "--messages", msgs, "--out", tmp_path / "x.json",
            "--model", "no-such-org/no-such-model@main",
            env_extra={"HF_HUB_OFFLINE": "1", "TRANSFORMERS_OFFLINE": "1"},
        )
        assert res.returncode == 3
        assert "model unavailable" in res.stderr
