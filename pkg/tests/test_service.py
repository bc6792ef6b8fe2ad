import concurrent.futures
import itertools
import random

import pytest
from fastapi.testclient import TestClient

from udtriage.adjudication import ProjectStore
from udtriage.agreement import FeatureKind, agreement_report, correction_report
from udtriage.conllu import Corpus, Sentence, Token
from udtriage.service import create_app

from genutil import perturb_sentence, random_corpus


def tok(i, head, form="가", lemma="가", xpos="NNG", deprel="dep"):
    return Token(i, form, lemma, "NOUN", xpos, "_", head, deprel, "_", "_")


def sent(key, tokens):
    return Sentence([f"# sent_id = {key}"], tokens)


def make_clock():
    counter = itertools.count(1)
    return lambda: f"t{next(counter):06d}"


@pytest.fixture
def project_root(tmp_path):
    a = Corpus([sent("s1", [tok(1, 3, lemma="알"), tok(2, 3, deprel="obj"), tok(3, 0, deprel="root")])])
    b = Corpus([sent("s1", [tok(1, 2, lemma="안"), tok(2, 3, deprel="obl"), tok(3, 0, deprel="root")])])
    store = ProjectStore.create(tmp_path / "proj", "proj", a, b, clock=make_clock())
    store.close()
    return tmp_path


@pytest.fixture
def client(project_root):
    app = create_app(project_root)
    with TestClient(app) as test_client:
        yield test_client
    app.state.registry.close_all()


def queue_ids(client, **params):
    response = client.get("/v1/projects/proj/queue", params=params)
    assert response.status_code == 200
    return [item["record"]["record_id"] for item in response.json()["items"]]


class TestQueueEndpoint:
    def test_fresh_project_full_queue(self, client):
        response = client.get("/v1/projects/proj/queue", params={"status": "Pending"})
        payload = response.json()
        assert payload["total"] == 3
        assert len(payload["items"]) == 3
        assert payload["items"][0]["context"]["tokens_a"]

    def test_feature_filter(self, client):
        ids = queue_ids(client, feature="DEPREL")
        assert len(ids) == 1
        assert ids[0].endswith("DEPREL")

    def test_unknown_project_404(self, client):
        assert client.get("/v1/projects/nope/queue").status_code == 404

    def test_invalid_filter_400(self, client):
        assert client.get("/v1/projects/proj/queue", params={"status": "Weird"}).status_code == 400
        assert client.get("/v1/projects/proj/queue", params={"role": "boss"}).status_code == 400

    def test_pagination_stable_by_record_id(self, client):
        page_1 = queue_ids(client, page=1, page_size=2)
        page_2 = queue_ids(client, page=2, page_size=2)
        assert len(page_1) == 2 and len(page_2) == 1
        assert page_1 + page_2 == sorted(page_1 + page_2)

    def test_projects_listing(self, client):
        response = client.get("/v1/projects")
        assert response.status_code == 200
        listing = response.json()
        assert listing[0]["project_id"] == "proj"
        assert listing[0]["total"] == 3


class TestAnnotationEndpoint:
    def post(self, client, item_id, role, label, key=None):
        headers = {}
        if key is not None:
            headers["Idempotency-Key"] = key
        return client.post(
            f"/v1/projects/proj/items/{item_id}/annotation",
            json={"role": role, "label": label},
            headers=headers,
        )

    def test_first_submission_ok(self, client):
        item_id = queue_ids(client, feature="DEPREL")[0]
        response = self.post(client, item_id, "annotator1", "obj")
        assert response.status_code == 200
        assert response.json()["status"] == "PartiallyReviewed"

    def test_independence_in_payload(self, client):
        item_id = queue_ids(client, feature="DEPREL")[0]
        self.post(client, item_id, "annotator2", "obl")
        unresolved_view = client.get(
            f"/v1/projects/proj/items/{item_id}", params={"role": "annotator1"}
        ).json()
        assert "annotator2_label" not in unresolved_view
        assert all(entry[0] != "annotator2" for entry in unresolved_view["history"])
        adjudicator_view = client.get(
            f"/v1/projects/proj/items/{item_id}", params={"role": "adjudicator"}
        ).json()
        assert adjudicator_view["annotator2_label"] == "obl"

    def test_idempotent_replay(self, client):
        item_id = queue_ids(client, feature="DEPREL")[0]
        first = self.post(client, item_id, "annotator1", "obj", key="once")
        replay = self.post(client, item_id, "annotator1", "obj", key="once")
        assert first.status_code == replay.status_code == 200
        assert first.json() == replay.json()
        view = client.get(f"/v1/projects/proj/items/{item_id}").json()
        annotations = [h for h in view["history"] if h[2] == "annotate"]
        assert len(annotations) == 1

    def test_adjudicator_on_pending_409(self, client):
        item_id = queue_ids(client)[0]
        response = self.post(client, item_id, "adjudicator", "x")
        assert response.status_code == 409

    def test_duplicate_submission_409(self, client):
        item_id = queue_ids(client, feature="DEPREL")[0]
        self.post(client, item_id, "annotator1", "obj")
        assert self.post(client, item_id, "annotator1", "obl").status_code == 409

    def test_observer_mutation_400(self, client):
        item_id = queue_ids(client)[0]
        assert self.post(client, item_id, "observer", "x").status_code == 400

    def test_role_via_header(self, client):
        item_id = queue_ids(client, feature="DEPREL")[0]
        response = client.post(
            f"/v1/projects/proj/items/{item_id}/annotation",
            json={"label": "obj"},
            headers={"X-Role": "annotator1"},
        )
        assert response.status_code == 200

    def test_unknown_item_404(self, client):
        assert self.post(client, "missing", "annotator1", "x").status_code == 404

    def test_bad_label_400(self, client):
        item_id = queue_ids(client, feature="HEAD")[0]
        assert self.post(client, item_id, "annotator1", "not-a-head").status_code == 400


def drain(client):
    """Resolve the fixture queue: DEPREL via adjudication, the rest by agreement."""
    for item in client.get("/v1/projects/proj/queue").json()["items"]:
        item_id = item["record"]["record_id"]
        feature = item["record"]["feature"]
        if feature == "DEPREL":
            labels = ("obj", "obl")
        elif feature == "HEAD":
            labels = ("3", "3")
        else:
            labels = ("알", "알")
        for role, label in zip(("annotator1", "annotator2"), labels):
            response = client.post(
                f"/v1/projects/proj/items/{item_id}/annotation",
                json={"role": role, "label": label},
            )
            assert response.status_code == 200, response.text
        if labels[0] != labels[1]:
            response = client.post(
                f"/v1/projects/proj/items/{item_id}/annotation",
                json={"role": "adjudicator", "label": "ccomp"},
            )
            assert response.status_code == 200


class TestDashboard:
    def test_fresh_project_shape(self, client):
        payload = client.get("/v1/projects/proj/dashboard").json()
        features = [row["feature"] for row in payload["agreement"]["rows"]]
        assert features == ["LEMMA", "XPOS", "HEAD", "DEPREL", "Average"]
        assert payload["burndown"]["remaining"] == 3
        human_rates = {row["feature"]: row["rate"] for row in payload["corrections"]["human"]}
        assert human_rates["LEMMA"] == "0.00"

    def test_burndown_reaches_zero_and_matches_store(self, client, project_root):
        drain(client)
        payload = client.get("/v1/projects/proj/dashboard").json()
        assert payload["burndown"]["remaining"] == 0
        adjudicated = {row["feature"]: row["corrected"] for row in payload["corrections"]["adjudicated"]}
        assert adjudicated["DEPREL"] == 1
        assert adjudicated["LEMMA"] == 0

    def test_dashboard_equals_fresh_recomputation(self, client, project_root):
        drain(client)
        payload = client.get("/v1/projects/proj/dashboard").json()
        store = ProjectStore.open(project_root / "proj")
        report = agreement_report(store.corpus_a, store.corpus_b)
        total = store.aligned_token_total()
        human = correction_report(store.correction_events("human"), total)
        store.close()
        assert payload["agreement"]["rows"] == report.to_rows()
        assert payload["corrections"]["human"] == human.to_rows()

    def test_read_your_writes(self, client):
        before = client.get("/v1/projects/proj/dashboard").json()["burndown"]
        item_id = queue_ids(client, feature="DEPREL")[0]
        client.post(
            f"/v1/projects/proj/items/{item_id}/annotation",
            json={"role": "annotator1", "label": "obj"},
        )
        after = client.get("/v1/projects/proj/dashboard").json()["burndown"]
        assert after["PartiallyReviewed"] == before["PartiallyReviewed"] + 1


class TestConcurrency:
    def test_concurrent_submissions_serialize(self, tmp_path):
        rng = random.Random(21)
        base = random_corpus(rng, 10, punct_rate=0.0)
        other = Corpus(
            [perturb_sentence(rng, s, lemma_rate=0.5) for s in base.sentences], "b"
        )
        store = ProjectStore.create(tmp_path / "big", "big", base, other, clock=make_clock())
        item_ids = list(store.items)
        store.close()
        app = create_app(tmp_path)
        with TestClient(app) as client:
            def submit(args):
                item_id, role = args
                return client.post(
                    f"/v1/projects/big/items/{item_id}/annotation",
                    json={"role": role, "label": "합"},
                ).status_code

            jobs = [(item_id, role) for item_id in item_ids for role in ("annotator1", "annotator2")]
            rng.shuffle(jobs)
            with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
                statuses = list(pool.map(submit, jobs))
            assert all(code == 200 for code in statuses)
            burndown = client.get("/v1/projects/big/dashboard").json()["burndown"]
            assert burndown["remaining"] == 0
            assert burndown["ResolvedByAgreement"] == len(item_ids)
        # replay equals the live outcome
        reopened = ProjectStore.open(tmp_path / "big")
        assert all(item.final_label == "합" for item in reopened.items.values())
        reopened.close()
        app.state.registry.close_all()
