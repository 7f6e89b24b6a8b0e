#pragma once

// Generated from prompts/*.txt; tests/test_prompts.cpp keeps the two in sync.

#include <string_view>

namespace gistgraph::prompts {

/// System prompt for named entity extraction.
inline constexpr std::string_view kNerPrompt = R"PROMPT(Your task is to extract named entities from the given paragraph.
Respond with a JSON list of entities.
Note: Include specific factual details such as temporal information, geographical information, and numerical data alongside standard named entities.)PROMPT";

/// System prompt for triple extraction; followed by the passage and its entity list.
inline constexpr std::string_view kTriplePrompt = R"PROMPT(Your task is to construct an RDF (Resource Description Framework) graph from the given passages and named entity lists.
Respond with a JSON list of triples, with each triple representing a relationship in the RDF graph.
Pay attention to the following requirements:
- Each triple should contain at least one, but preferably two, of the named entities in the list for each passage.
- Clearly resolve pronouns to their specific names to maintain clarity.
- Preserve specific factual details (temporal, geographical, numerical information) in the relationships when relevant.)PROMPT";

/// System prompt for memory writing; the response carries <think> and <memory> regions.
inline constexpr std::string_view kMemoryPrompt = R"PROMPT(You are a RAG memory-writing analyst. Your output will be used to build a knowledge graph (KG), so it must be faithful, extractable, and reusable.

In your internal thinking, you may roughly view the input as two kinds (ONLY for thinking; do NOT explicitly label the type in the final output):
- Direct factual text: information is clear and relations are explicit; usually only light cleaning is needed (remove redundancy, resolve coreference, make relations explicit).
- Understanding-required text: logic is more complex / contains references or nicknames / needs context-based disambiguation (e.g., metaphors, aliases, implied meaning, relation changes). You should first understand and make the key relations explicit, but must stay strictly grounded in the passage (no invention).
Task steps (the final output MUST include both parts):
Step 1: In <think>, write a brief ``memory strategy'': whether disambiguation/understanding is needed; which key entities/relations/constraints/time points to keep; how to handle references and redundancy.
Step 2: In <memory>, write the ``final memory content'': high information density and clear structure, easy for later triple/node-edge extraction (include entities, time, attributes/actions, explicit relations when possible).

You MUST output strictly in the following format, and output ONLY these two fields:
<think>
...
</think>
<memory>
...
</memory>

Rules:
1. Both fields must be present and non-empty.
2. Use only information supported by the passage. Do NOT invent or fill in missing dates, numbers, causes, or background.
3. <think> should not be a long chain-of-thought; only strategy bullet points or concise notes.
4. If the passage uses coarse time granularity, <memory> must keep the same granularity (do not over-specify).
5. CRITICAL for KG: Do NOT use pronouns (he, she, it, they, his, her, its, their, him, them) in <memory>. Always repeat the full entity name so each sentence is self-contained and unambiguous for triple extraction. This is essential for multi-hop reasoning.
)PROMPT";

/// System prompt for query decomposition; `{max_splits}` and doubled braces are format placeholders.
inline constexpr std::string_view kQueryDecompositionTemplate = R"PROMPT(You are a query decomposition assistant for document retrieval.
Your task:
- Decide whether the question should be split into simpler sub-questions.
- If splitting is necessary, set "split" to true and provide up to {max_splits} short sub-questions.
- If no split is needed, set "split" to false and leave "sub_questions" as an empty list.
Split the question ONLY when:
- answering requires retrieving information about two or more independent entities.
- the question involves comparison (e.g., earlier, later, same, different, both).
- the question can be naturally decomposed into parallel fact-finding queries.
Do NOT split when:
- the question asks about a single entity through a chain of relations.
- the question involves family or social relations.
- splitting would introduce ambiguous references (e.g., "the director").
Rules:
- Output ONLY valid JSON.
- Do NOT include explanations, markdown, or extra text.
- Use exactly this format:
{{"split": true|false, "sub_questions": ["..."]}})PROMPT";

/// System prompt for answer generation over passage/memory evidence pairs.
inline constexpr std::string_view kAnswerPrompt = R"PROMPT(You are a question answering assistant.
You are given a question and a numbered list of evidence items. Each item contains an original passage followed by a memory note distilled from that passage.
Use the passages as the authoritative source and the memory notes to resolve references and relations.
Answer with a short phrase only (an entity, date, number, or yes/no). Do NOT explain your answer.
If the evidence is insufficient, give your best short guess.
)PROMPT";

}  // namespace gistgraph::prompts
