#include "lot/prompts.hpp"

#include "lot/util.hpp"

namespace lot {

namespace {

constexpr const char* kProposeInitial = R"(You are comparing how two AI assistants think through the same problem.

Reasoning from {codename_a}:
<<<
{trace_a}
>>>

Reasoning from {codename_b}:
<<<
{trace_b}
>>>

List the reasoning behaviors that distinguish {codename_a}'s reasoning from {codename_b}'s.
A behavior qualifies if it is clearly present in one reasoning and absent from the other,
or appears noticeably more often in one of them. Describe behaviors, not topics: name what
the assistant is doing (verifying, enumerating cases, restating the goal, ...), not what
the problem is about.

First think briefly about where the two reasonings diverge. Then output every
distinguishing behavior inside one fenced block, one behavior per line, exactly in this form:

```
FEATURE: <short behavior name> :: <one-sentence definition of the behavior>
```

Output nothing after the closing fence. If the two reasonings are indistinguishable, output
an empty fenced block.
)";

constexpr const char* kProposeAdditional = R"(You are refining a taxonomy of reasoning behaviors that separates two AI assistants.

Current taxonomy:
{taxonomy}

The taxonomy above failed to separate the following pair. Both reasonings answer the same
question.

Reasoning from {codename_a}:
<<<
{trace_a}
>>>

Reasoning from {codename_b}:
<<<
{trace_b}
>>>

Propose additional reasoning behaviors, not already covered by the current taxonomy, that
distinguish {codename_a}'s reasoning from {codename_b}'s in this pair. Only propose genuinely
new behaviors; do not rephrase existing entries.

Output the new behaviors inside one fenced block, one per line, exactly in this form:

```
FEATURE: <short behavior name> :: <one-sentence definition of the behavior>
```

If no new distinguishing behavior exists, output an empty fenced block.
)";

constexpr const char* kAnnotatePor = R"(You are auditing one AI assistant's reasoning trace against a taxonomy of reasoning behaviors.

Taxonomy:
{taxonomy}

Reasoning trace:
<<<
{trace}
>>>

For every behavior in the taxonomy, decide whether it occurs anywhere in the trace,
following the behavior's definition. Output one line per behavior, in taxonomy order,
inside one fenced block:

```
<behavior name> = <0 or 1>
```

Use 1 if the behavior occurs at least once, 0 otherwise. Cover every behavior exactly once
and output nothing after the closing fence.
)";

constexpr const char* kAnnotateBor = R"(You are auditing one AI assistant's reasoning trace against a taxonomy of reasoning behaviors.

Taxonomy:
{taxonomy}

Reasoning trace:
<<<
{trace}
>>>

Split the trace into sentences and decide, for each sentence, which behaviors from the
taxonomy it performs. Then report, for every behavior, how many sentences perform it.
Output one line per behavior, in taxonomy order, inside one fenced block:

```
<behavior name> = <sentence count>
```

Counts are non-negative integers; a sentence may count toward several behaviors, and the
count for a behavior can never exceed the number of sentences. Cover every behavior exactly
once and output nothing after the closing fence.
)";

constexpr const char* kFspClassify = R"(Two AI assistants, {codename_a} and {codename_b}, reason in systematically different ways.
Below are labeled example reasonings from each of them, followed by two unlabeled reasonings
on a new question: one from each assistant.

{shots}

Unlabeled reasoning 1:
<<<
{trace_a}
>>>

Unlabeled reasoning 2:
<<<
{trace_b}
>>>

Which assistant produced each unlabeled reasoning? Answer with the two names on one line,
first for reasoning 1, then for reasoning 2:

ANSWER: <name for reasoning 1> <name for reasoning 2>
)";

constexpr const char* kVmlUpdate = R"(You maintain natural-language decision rules for telling apart the reasoning of two AI
assistants, {codename_a} and {codename_b}.

Current decision rules:
<<<
{rules}
>>>

New labeled training examples:

{shots}

Revise the decision rules so they classify the examples above correctly while staying
general. Express them as if-else style rules over observable reasoning behaviors, e.g.
"if the reasoning re-derives the same fact more than once, predict <name>; else ...".

Output the complete revised rules inside one fenced block:

```
<revised if-else rules>
```
)";

constexpr const char* kVmlClassify = R"(Two AI assistants, {codename_a} and {codename_b}, reason in systematically different ways.
Apply the decision rules below to the two unlabeled reasonings that follow, based on the
patterns you observe in them.

Decision rules:
<<<
{rules}
>>>

Unlabeled reasoning 1:
<<<
{trace_a}
>>>

Unlabeled reasoning 2:
<<<
{trace_b}
>>>

Which assistant produced each unlabeled reasoning? Answer with the two names on one line,
first for reasoning 1, then for reasoning 2:

ANSWER: <name for reasoning 1> <name for reasoning 2>
)";

constexpr const char* kSummarize = R"(Summarize the numbered paragraphs of the reasoning below into a list of concise steps.
Each step is one short sentence describing what the reasoning does in that paragraph.
Emit at least one step per paragraph, and keep any distinctive tokens or expressions a
paragraph relies on.

Question:
{question}

Reasoning paragraphs:
{paragraphs}

Output one line per step, in paragraph order, inside one fenced block:

```
STEP <paragraph number>: <step text>
```
)";

constexpr const char* kEdit = R"(Below is a list of reasoning steps summarizing how a question was approached, followed by
editing directives. Apply the directives: remove the steps that exhibit the listed
behaviors, and add steps that perform the requested behaviors where they help. Keep all
other steps unchanged and in order.

Question:
{question}

Steps:
{steps}

Directives:
{directives}

Output the complete revised list of steps inside one fenced block, one line per step:

```
STEP: <step text>
```
)";

constexpr const char* kExpand = R"(You are reconstructing a full reasoning trace from a summary, one step at a time.

Question:
{question}

Reasoning so far:
<<<
{prior}
>>>

Next step to expand:
{step}

Write the next reasoning paragraph that carries out this step, continuing naturally from
the reasoning so far. Output only the paragraph text.
)";

constexpr const char* kFinalAnswer = R"(Question:
{question}

Reasoning:
<<<
{reasoning}
>>>

Using the reasoning above, state the final answer to the question. Put the final answer
inside \boxed{}.
)";

constexpr const char* kSampleMath = R"(Solve the following math problem. Think step by step, then put your final answer inside
\boxed{}.

{question}
)";

constexpr const char* kSampleGpqa = R"(Answer the following multiple-choice science question. Think step by step, then put the
letter of your final choice inside \boxed{}.

{question}
)";

constexpr const char* kSampleCrux = R"(You are given a Python snippet and an input. Execute the code mentally and predict the
output. Think step by step, then give your prediction between [ANSWER] and [/ANSWER] tags
with no extra words.

{question}
)";

const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> t = {
      {"propose_initial", kProposeInitial},
      {"propose_additional", kProposeAdditional},
      {"annotate_por", kAnnotatePor},
      {"annotate_bor", kAnnotateBor},
      {"fsp_classify", kFspClassify},
      {"vml_update", kVmlUpdate},
      {"vml_classify", kVmlClassify},
      {"intervene_summarize", kSummarize},
      {"intervene_edit", kEdit},
      {"intervene_expand", kExpand},
      {"final_answer", kFinalAnswer},
      {"sample_math", kSampleMath},
      {"sample_gpqa", kSampleGpqa},
      {"sample_crux", kSampleCrux},
  };
  return t;
}

}  // namespace

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  set.templates_ = builtin_templates();
  return set;
}

TemplateSet TemplateSet::from_dir(const std::filesystem::path& dir) {
  TemplateSet set = builtin();
  if (!std::filesystem::is_directory(dir))
    throw Error("template directory does not exist: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    set.templates_[entry.path().stem().string()] = read_file(entry.path());
  }
  return set;
}

const std::string& TemplateSet::raw(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("unknown prompt template \"" + name + "\"");
  return it->second;
}

std::string TemplateSet::render(const std::string& name,
                                const std::map<std::string, std::string>& vars) const {
  std::string out = raw(name);
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) {
    (void)v;
    out.push_back(k);
  }
  return out;
}

}  // namespace lot
