import json
from typing import Any, Callable, Dict, List, Optional, Union

import pytest
import requests

from src.config import ReferenceConfig, ReportConfig, RunConfig
from src.data_classes import Document, Metric, PerturbationKind, QASample, QuestionType, SupportingFact


def toy_record(i: int) -> Dict[str, Any]:
    """One synthetic HotpotQA record; cells cycle every four ids."""
    cell = i // 4 % 6
    fact_count = 2 + cell // 2
    qtype = "bridge" if cell % 2 == 0 else "comparison"
    alpha, beta, gamma = f"Alpha {i}", f"Beta {i}", f"Gamma {i}"
    facts = {
        2: [[alpha, 0], [beta, 0]],
        3: [[alpha, 0], [alpha, 2], [beta, 0]],
        4: [[alpha, 0], [alpha, 2], [beta, 0], [beta, 2]],
    }[fact_count]
    return {
        "_id": f"toy-{i:02d}",
        "question": f"Where was {beta} born?",
        "answer": f"city{i}",
        "type": qtype,
        "supporting_facts": facts,
        "context": [
            [
                alpha,
                [
                    f"{alpha} was founded in city{i} by {beta}.",
                    f"{alpha} sells lamps and chairs.",
                    f"{alpha} opened a second office in {1990 + i}.",
                    f"{alpha} employs forty people.",
                ],
            ],
            [
                beta,
                [
                    f"{beta} was born in city{i}.",
                    f"{beta} studied music as a child.",
                    f"{beta} later moved abroad.",
                    f"{beta} enjoys long walks.",
                ],
            ],
            [gamma, [f"{gamma} is a small village.", f"{gamma} has a bakery."]],
        ],
    }


HAND_RECORDS = [
    {
        "_id": "5a8b57f25542995d1e6f1371",
        "question": "Were Scott Derrickson and Ed Wood of the same nationality?",
        "answer": "yes",
        "type": "comparison",
        "supporting_facts": [["Scott Derrickson", 0], ["Ed Wood", 0]],
        "context": [
            [
                "Ed Wood (film)",
                [
                    "Ed Wood is a 1994 American biographical period comedy-drama film directed by Tim Burton.",
                    "It stars Johnny Depp as cult filmmaker Ed Wood.",
                ],
            ],
            [
                "Scott Derrickson",
                [
                    "Scott Derrickson (born July 16, 1966) is an American director, screenwriter and producer.",
                    "He lives in Los Angeles, California.",
                    "He is best known for directing horror films such as Sinister.",
                ],
            ],
            [
                "Ed Wood",
                [
                    "Edward Davis Wood Jr. was an American filmmaker, actor, writer, producer, and director.",
                    "In the 1950s, Wood made a number of low-budget films.",
                ],
            ],
        ],
    },
    {
        "_id": "5a8c7595554299585d9e36b6",
        "question": "What government position was held by the woman who portrayed Corliss Archer in Kiss and Tell?",
        "answer": "Chief of Protocol",
        "type": "bridge",
        "supporting_facts": [
            ["Kiss and Tell (1945 film)", 0],
            ["Shirley Temple", 0],
            ["Shirley Temple", 1],
        ],
        "context": [
            [
                "Kiss and Tell (1945 film)",
                [
                    "Kiss and Tell is a 1945 American comedy film starring then 17-year-old Shirley Temple as Corliss Archer.",
                    "In the film, two teenage girls cause their respective parents much concern.",
                ],
            ],
            [
                "Shirley Temple",
                [
                    "Shirley Temple Black was an American actress, singer, dancer and diplomat.",
                    "As an adult, she was named United States ambassador and served as Chief of Protocol.",
                    "Temple began her film career in 1931 when she was three years old.",
                ],
            ],
        ],
    },
]


@pytest.fixture
def hand_records() -> List[Dict[str, Any]]:
    return json.loads(json.dumps(HAND_RECORDS))


@pytest.fixture
def toy_records() -> List[Dict[str, Any]]:
    return [toy_record(i) for i in range(24)]


@pytest.fixture
def write_json(tmp_path) -> Callable[[Any, str], str]:
    def _write(payload: Any, name: str = "data.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def toy_dataset_path(write_json, toy_records) -> str:
    return write_json(toy_records, "toy.json")


def make_sample(
    facts: List[tuple],
    docs: Optional[Dict[str, List[str]]] = None,
    sample_id: str = "s1",
    question: str = "Who founded Acme?",
    answer: str = "Jane Roe",
    qtype: QuestionType = QuestionType.BRIDGE,
) -> QASample:
    docs = docs or {
        "Acme": ["Acme is a company.", "Acme was founded by Jane Roe.", "Acme makes anvils.", "Acme is old."],
        "Jane Roe": ["Jane Roe is an engineer.", "Jane Roe lives in Ohio.", "Jane Roe likes Acme.", "She paints."],
    }
    return QASample(
        id=sample_id,
        question=question,
        gold_answer=answer,
        question_type=qtype,
        context=tuple(Document(title, tuple(sentences)) for title, sentences in docs.items()),
        supporting_facts=tuple(SupportingFact(t, i) for t, i in facts),
    )


@pytest.fixture
def sample2() -> QASample:
    return make_sample([("Acme", 1), ("Jane Roe", 0)])


@pytest.fixture
def sample3() -> QASample:
    return make_sample([("Acme", 0), ("Acme", 1), ("Jane Roe", 1)])


@pytest.fixture
def sample4() -> QASample:
    return make_sample([("Acme", 0), ("Acme", 1), ("Jane Roe", 0), ("Jane Roe", 2)])


class FakeResponse:
    def __init__(self, status_code: int = 200, payload: Any = None, text: str = ""):
        self.status_code = status_code
        self._payload = payload
        self.text = text or json.dumps(payload)

    def json(self) -> Any:
        if self._payload is None:
            raise ValueError("no JSON body")
        return self._payload


class FakeSession:
    """Stands in for requests.Session: replies come from a queue or a handler."""

    def __init__(self, replies: Optional[List[Union[FakeResponse, Exception]]] = None, handler=None):
        self.replies = list(replies or [])
        self.handler = handler
        self.calls: List[Dict[str, Any]] = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        reply = self.handler(url, json) if self.handler else self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def chat_reply(text: str, finish_reason: str = "stop") -> FakeResponse:
    return FakeResponse(200, {"choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": finish_reason}]})


@pytest.fixture
def fake_session() -> Callable[..., FakeSession]:
    return FakeSession


@pytest.fixture
def connection_error() -> Exception:
    return requests.ConnectionError("connection refused")


@pytest.fixture
def mock_config(tmp_path, toy_dataset_path) -> Callable[..., RunConfig]:
    """Desk-scale mock config writing into tmp_path; keyword args override fields."""

    def _make(**overrides: Any) -> RunConfig:
        base = dict(
            dataset=toy_dataset_path,
            per_cell=2,
            seed=7,
            models=["mock-reader"],
            temperatures=[0.0, 0.2],
            perturbations=[
                PerturbationKind.ORIGINAL,
                PerturbationKind.SENTENCE_REPLACEMENT,
                PerturbationKind.SENTENCE_REMOVAL,
                PerturbationKind.NER_REPLACEMENT,
            ],
            runs_per_condition=3,
            metrics=[Metric.EM, Metric.F1, Metric.ROUGEL],
            reference=ReferenceConfig(model="mock-reader", temperature=0.0),
            report=ReportConfig(metric=Metric.F1, figures=False),
            concurrency=4,
            cache_dir=str(tmp_path / "cache"),
            output_dir=str(tmp_path / "out"),
            mock=True,
        )
        base.update(overrides)
        return RunConfig(**base).validate()

    return _make
