import pytest
import requests

from src.cache import FileCache
from src.config import ReferenceConfig
from src.data_classes import Document, ReferenceSource
from src.errors import EmptyField, EmptyGeneration, HarnessError
from src.mock_llm import MockChatBackend
from src.prompts import RAG_SYSTEM_PROMPT, build_rag_prompt, build_ref_prompt
from src.refproc import extract_reference, generate_references, load_overrides, sentence_ends
from tests.conftest import make_sample

REF_TEMPLATE = (
    "Question: {q}\nAnswer: {a}\n"
    "Generate a complete and coherent answer based on the given question and answer, being as brief as possible:"
)


def test_ref_prompt_is_byte_exact():
    messages = build_ref_prompt("Who flew?", "X")
    assert messages == ({"role": "user", "content": REF_TEMPLATE.replace("{q}", "Who flew?").replace("{a}", "X")},)


def test_ref_prompt_keeps_braces():
    content = build_ref_prompt("What is {answer}?", "{question}")[0]["content"]
    assert content.startswith("Question: What is {answer}?\nAnswer: {question}\n")


def test_ref_prompt_empty_fields():
    with pytest.raises(EmptyField):
        build_ref_prompt("", "X")
    with pytest.raises(EmptyField):
        build_ref_prompt("Who?", "  ")


def test_rag_prompt_layout():
    docs = [Document("A", ("a0.", "a1.")), Document("B", ("b0.",))]
    system, user = build_rag_prompt("Why?", docs)
    assert system == {"role": "system", "content": RAG_SYSTEM_PROMPT}
    assert user["content"] == "Title: A\na0.\na1.\n\nTitle: B\nb0.\n\nQuestion: Why?"
    assert build_rag_prompt("Why?", docs) == (system, user)


def test_rag_prompt_without_documents():
    assert build_rag_prompt("Why?", [])[1]["content"] == "Question: Why?"


@pytest.mark.parametrize(
    "generated, reference",
    [
        ("Paris is the capital of France. It lies in Europe.", "Paris is the capital of France."),
        ("Yes. Both are American astronauts. They flew together.", "Yes. Both are American astronauts."),
        ("No", "No"),
        ("  no, they were not. One was Canadian. ", "no, they were not. One was Canadian."),
        ("Dr. Smith lives in the U.S. capital. He is a surgeon.", "Dr. Smith lives in the U.S. capital."),
        ("John F. Kennedy was president! He was elected in 1960.", "John F. Kennedy was president!"),
        ("Nobody knows. It is lost.", "Nobody knows."),
        ("The answer is 3.5 meters. More text.", "The answer is 3.5 meters."),
    ],
)
def test_extract_reference(generated, reference):
    assert extract_reference(generated) == reference


def test_extract_reference_is_prefix_and_idempotent():
    for text in ["A. B. C.", "Yes! Sure? Fine.", "Mr. X arrived. Then left.", "One sentence"]:
        once = extract_reference(text)
        assert text.strip().startswith(once)
        assert extract_reference(once) == once


def test_extract_reference_empty():
    with pytest.raises(EmptyGeneration):
        extract_reference("   ")


def test_sentence_ends():
    assert sentence_ends("One. Two? Three!") == [4, 9, 16]


def test_load_overrides(tmp_path):
    path = tmp_path / "overrides.yaml"
    path.write_text("s1: Jane Roe founded Acme.\n", encoding="utf-8")
    assert load_overrides(path) == {"s1": "Jane Roe founded Acme."}
    assert load_overrides(None) == {}
    path.write_text("s1: ''\n", encoding="utf-8")
    with pytest.raises(HarnessError):
        load_overrides(path)


def test_generate_references_with_mock(tmp_path):
    samples = [make_sample([("Acme", 1), ("Jane Roe", 0)], sample_id=f"s{i}") for i in range(3)]
    backend = MockChatBackend()
    config = ReferenceConfig(model="mock-reader", temperature=0.0)
    cache = FileCache(tmp_path)

    refs, failures = generate_references(
        samples, backend, cache, config, overrides={"s2": "Jane Roe did."}, seed=1, concurrency=2
    )
    assert failures == {}
    assert refs["s0"].text == "Jane Roe"
    assert refs["s0"].source == ReferenceSource.GENERATED
    assert refs["s2"].source == ReferenceSource.MANUAL_OVERRIDE
    assert backend.calls == 2

    again, _ = generate_references(samples[:1], backend, cache, config, seed=1)
    assert again["s0"].source == ReferenceSource.CACHED
    assert again["s0"].text == "Jane Roe"
    assert backend.calls == 2


class FlakyReader(MockChatBackend):
    """Mock reader whose transport breaks for one question."""

    def complete(self, request):
        if "Who broke?" in request.messages[-1]["content"]:
            raise requests.exceptions.ContentDecodingError("bad gzip stream")
        return super().complete(request)


def test_one_failed_reference_does_not_stop_the_batch(tmp_path):
    samples = [make_sample([("Acme", 1), ("Jane Roe", 0)], sample_id=f"s{i}") for i in range(3)]
    samples.append(make_sample([("Acme", 1), ("Jane Roe", 0)], sample_id="broken", question="Who broke?"))
    config = ReferenceConfig(model="mock-reader", temperature=0.0)

    refs, failures = generate_references(samples, FlakyReader(), FileCache(tmp_path), config, seed=1)
    assert set(failures) == {"broken"}
    assert "ContentDecodingError" in failures["broken"]
    assert {sample_id: ref.text for sample_id, ref in refs.items()} == {f"s{i}": "Jane Roe" for i in range(3)}
