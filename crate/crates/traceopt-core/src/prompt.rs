//! Prompt templates for the policy model and the judge model.

/// Default task prompt; `{{ problem }}` is replaced with the statement.
pub const DEFAULT_PROMPT: &str = "Please reason step by step, and put your final answer within \\boxed{}.\n\n{{ problem }}\n";

/// Alternate prompt asking the model to be quick, for comparison runs.
pub const FAST_PROMPT: &str = "Please reason step by step, and put your final answer within \\boxed{}.\n\nSolve the problem as quickly as possible.\n\n{{ problem }}\n";

/// Judge prompt: per-chunk KEEP/REMOVE verdicts over numbered reasoning
/// chunks. Placeholders: `{problem}`, `{ground_truth_answer}`,
/// `{thinking_patterns}`.
pub const JUDGE_PROMPT: &str = r#"You will be given:
1. A math problem
2. A ground-truth answer
3. A series of reasoning chunks

Your task has two parts:

STEP 1: Filtering
Decide for each chunk whether to KEEP AS IS or REMOVE.
KEEP AS IS if the chunk contributes meaningfully:
- Narrowing down possibilities
- Showing intermediate calculations
- Offering partial insight (even if incomplete)
- Reinforcing understanding through repetition
REMOVE if:
- It adds no meaningful content
- It is factually incorrect in a harmful way
- It is entirely off-topic or unhelpfully redundant

STEP 2: Final Reasoning Construction
Using only the KEPT chunks:
- Concatenate them with minimal edits for flow.
- Use each kept chunk verbatim.
- Do not paraphrase or skip ideas.
- Preserve the original tone (informal, exploratory, etc).
End the reasoning with the final answer in this format: \boxed{{...}}

Output Format:

[OUTPUT]

[CHUNK_FILTERING_RESULTS]
[Chunk 1] KEEP AS IS
[Chunk 2] REMOVE
...
[Chunk N] KEEP AS IS

[FINAL_RECONSTRUCTED_REASONING]
"""
<Clean explanation using only the kept chunks. Minimal edits for flow.
End with the boxed final answer.>
"""

Now here is your input:
### Problem:
{problem}

### Ground-Truth
{ground_truth_answer}

### Reasoning Chunks:
{thinking_patterns}
"#;

/// Renders a task prompt template with the problem statement.
pub fn render_task_prompt(template: &str, statement: &str) -> String {
    template.replace("{{ problem }}", statement)
}
