import pytest
from fastapi.testclient import TestClient

from tigmt import model as M
from tigmt import subword as S
from tigmt.serve import TranslationEngine, build_app


@pytest.fixture(scope="module")
def engine(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("serve")
    src_vocab = ["<unk>", "<s>", "</s>", "<pad>", "a</w>", "b</w>"]
    tgt_vocab = ["<unk>", "<s>", "</s>", "<pad>", "x</w>", "y</w>"]
    cfg = M.ModelConfig(layers=1, heads=2, d_model=8, d_ff=16,
                        src_vocab=6, tgt_vocab=6, dropout=0.0,
                        max_position=8)
    ckpt = M.init_checkpoint(cfg, src_vocab, tgt_vocab, seed=1)
    ckpt.step = 42
    ckpt_path = tmp_path / "toy.ckpt"
    M.save_checkpoint(ckpt, str(ckpt_path))
    bpe_path = tmp_path / "toy.bpe"
    S.save_model(S.BpeModel(merges=[]), str(bpe_path))
    return TranslationEngine.load(str(ckpt_path), str(bpe_path), str(bpe_path))


@pytest.fixture
def client(engine):
    return TestClient(build_app(engine))


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["model_id"] == "toy.ckpt@step42"

    def test_loading(self):
        resp = TestClient(build_app(None)).get("/health")
        assert resp.status_code == 503
        assert resp.json() == {"status": "loading", "model_id": None}


class TestTranslate:
    def test_happy_path(self, client):
        resp = client.post("/translate", json={"text": "a b", "max_len": 4})
        assert resp.status_code == 200
        body = resp.json()
        assert set(body) == {"translation", "tokens", "model_id", "latency_ms"}
        assert body["model_id"] == "toy.ckpt@step42"
        assert isinstance(body["tokens"], list)
        assert body["latency_ms"] >= 0

    def test_deterministic(self, client):
        a = client.post("/translate", json={"text": "a b"}).json()
        b = client.post("/translate", json={"text": "a b"}).json()
        assert a["translation"] == b["translation"]
        assert a["tokens"] == b["tokens"]

    def test_empty_text(self, client):
        resp = client.post("/translate", json={"text": "   "})
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_malformed_body(self, client):
        resp = client.post("/translate", json={"txt": "a"})
        assert resp.status_code == 400
        resp = client.post(
            "/translate", content=b"not json",
            headers={"content-type": "application/json"},
        )
        assert resp.status_code == 400

    def test_over_length(self, client):
        # 20 single-letter words exceed max_position=8 after BPE
        resp = client.post("/translate", json={"text": "a " * 20})
        assert resp.status_code == 413
        assert "max_position" in resp.json()["error"]

    def test_loading_state(self):
        resp = TestClient(build_app(None)).post("/translate", json={"text": "a"})
        assert resp.status_code == 503


class TestStatic:
    def test_fallback_page(self, client):
        resp = client.get("/")
        assert resp.status_code == 200
        assert "translate" in resp.text

    def test_static_dir_mount(self, engine, tmp_path):
        (tmp_path / "index.html").write_text(
            "<html><body>client build</body></html>", encoding="utf-8"
        )
        app = build_app(engine, static_dir=str(tmp_path))
        resp = TestClient(app).get("/")
        assert resp.status_code == 200
        assert "client build" in resp.text
