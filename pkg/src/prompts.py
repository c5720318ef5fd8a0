"""
Prompt construction for RAG generation and reference processing

RAG user message layout (bit-exact):

    Title: <title>\\n<sentence 1>\\n<sentence 2>...
    \\n\\n between document blocks, then \\n\\nQuestion: <question>

With no documents the user message is just ``Question: <question>``.
"""

from typing import Dict, Sequence, Tuple

from src.data_classes import Document
from src.errors import EmptyField

Messages = Tuple[Dict[str, str], ...]

RAG_SYSTEM_PROMPT = (
    "You are a question answering assistant. Answer the question using the "
    "information in the retrieved documents below."
)

REF_INSTRUCTION = (
    "Generate a complete and coherent answer based on the given question and "
    "answer, being as brief as possible:"
)


def _document_block(doc: Document) -> str:
    return "\n".join([f"Title: {doc.title}", *doc.sentences])


def build_rag_prompt(question: str, context: Sequence[Document]) -> Messages:
    """System + user messages for one retrieval-augmented question."""
    if not question.strip():
        raise EmptyField("question is empty")
    blocks = [_document_block(doc) for doc in context]
    blocks.append(f"Question: {question}")
    return (
        {"role": "system", "content": RAG_SYSTEM_PROMPT},
        {"role": "user", "content": "\n\n".join(blocks)},
    )


def build_ref_prompt(question: str, answer: str) -> Messages:
    """Prompt that turns a short gold answer into a sentence-form reference.

    Substitution is literal concatenation, so braces in the inputs are kept.
    """
    if not question.strip():
        raise EmptyField("question is empty")
    if not answer.strip():
        raise EmptyField("answer is empty")
    content = "Question: " + question + "\nAnswer: " + answer + "\n" + REF_INSTRUCTION
    return ({"role": "user", "content": content},)
