#include "topicllm/prompts.hpp"

#include <fstream>
#include <sstream>

#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

PromptTemplate::PromptTemplate(std::string text,
                               std::vector<std::string> required)
    : text_(std::move(text)) {
  std::vector<std::string> missing;
  for (const auto& name : required) {
    if (!has(name)) missing.push_back("template is missing placeholder {" + name + "}");
  }
  if (!missing.empty()) throw ConfigError(std::move(missing));
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path,
                                         std::vector<std::string> required) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read prompt template " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(buf.str(), std::move(required));
}

bool PromptTemplate::has(std::string_view name) const {
  return text_.find("{" + std::string(name) + "}") != std::string::npos;
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& values) const {
  std::string out = text_;
  std::string trailer;
  for (const auto& [key, value] : values) {
    const std::string needle = "{" + key + "}";
    if (out.find(needle) != std::string::npos) {
      out = text::replace_all(std::move(out), needle, value);
    } else if (!value.empty()) {
      trailer += "\n" + value + "\n";
    }
  }
  return out + trailer;
}

namespace prompts {

namespace {

constexpr std::string_view kGeneration =
    R"(You will receive a document and a set of top-level topics from a topic hierarchy. Your task is to identify generalizable topics within the document that can act as top-level topics in the hierarchy. If any relevant topics are missing from the provided set, please add them. Otherwise, output the existing top-level topics as identified in the document.

[Top-level topics]
{topics}

[Examples]
Example 1: Adding "[1] Agriculture"
Document:
Saving Essential American Sailors Act or SEAS Act - Amends the Moving Ahead for Progress in the 21st Century Act (MAP-21) to repeal the Act's repeal of the agricultural export requirements that: (1) 25% of the gross tonnage of certain agricultural commodities or their products exported each fiscal year be transported on U.S. commercial vessels, and (2) the Secretary of Transportation (DOT) finance any increased ocean freight charges incurred in the transportation of such items. Revives and reinstates those repealed requirements to read as if they were never repealed.

Your response:
[1] Agriculture: Mentions policies relating to agricultural practices and products.

Example 2: Duplicate "[1] Trade", returning the existing topic
Document:
Amends the Harmonized Tariff Schedule of the United States to suspend temporarily the duty on mixtures containing Fluopyram.

Your response:
[1] Trade: Mentions the exchange of capital, goods, and services.

[Instructions]
Step 1: Determine topics mentioned in the document.
- The topic labels must be as GENERALIZABLE as possible. They must not be document-specific.
- The topics must reflect a SINGLE topic instead of a combination of topics.
- The new topics must have a level number, a short general label, and a topic description.
- The topics must be broad enough to accommodate future subtopics.
Step 2: Perform ONE of the following operations:
1. If there are already duplicates or relevant topics in the hierarchy, output those topics and stop here.
2. If the document contains no topic, return "None".
3. Otherwise, add your topic as a top-level topic. Stop here and output the added topic(s). DO NOT add any additional levels.

[Document]
{document}

Please ONLY return the relevant or modified topics at the top level in the hierarchy.

[Your response]
)";

constexpr std::string_view kSubtopics =
    R"(You will receive a branch from a topic hierarchy along with some documents assigned to the top-level topic of that branch. Your task is to identify generalizable second-level topics that can act as subtopics to the top-level topic in the provided branch. Add your topic(s) if they are missing from the provided branch. Otherwise, return the existing relevant or duplicate topics.

[Example] (Return "[2] Exports" (new) and "[2] Tariff" (existing) as the subtopics of "[1] Trade" (provided).)
Topic branch:
[1] Trade
    [2] Tariff
    [2] Foreign Investments

Document 1:
Export Promotion Act of 2012 - Amends the Export Enhancement Act of 1988 to revise the duties of the Trade Promotion Coordinating Committee (TPCC). Requires the TPCC to: (1) make a recommendation for the annual unified federal trade promotion budget to the President; and (2) review the proposed fiscal year budget of each federal agency with responsibility for export promotion or export financing activities before it is submitted to the Office of Management and Budget (OMB) and the President, when (as required by current law) assessing the appropriate levels and allocation of resources among such agencies in support of such activities.

Document 2:
Amends the Harmonized Tariff Schedule of the United States to suspend temporarily the duty on mixtures containing Fluopyram.

Document 3:
Securing Exports Through Coordination and Technology Act - Amends the Foreign Relations Authorization Act, Fiscal Year 2003. Requires carriers obliged to file Shipper's Export Declarations to file them through AES (either directly or through intermediaries) before items are exported from any U.S. port, unless the Secretary of Commerce grants an exception.

Your response:
[1] Trade
    [2] Exports (Document: 1, 3): Mentions export policies on goods.
    [2] Tariff (Document: 2): Mentions tax policies on imports or exports of goods.

[Instructions]
Step 1: Determine PRIMARY and GENERALIZABLE topics mentioned in the documents.
- The topics must be generalizable among the provided documents.
- Each topic must not be too specific so that it can accommodate future subtopics.
- Each topic must reflect a SINGLE topic instead of a combination of topics.
- Each top-level topic must have a level number and a short label. Second-level topics should also include the original documents associated with these topics (separated by commas) as well as a short description of the topic.
- The number of topics proposed cannot exceed the number of documents provided.
Step 2: Perform ONE of the following operations:
1. If the provided top-level topic is specific enough, DO NOT add any subtopics. Return the provided top-level topic.
2. If your topic is duplicate or relevant to the provided topics, DO NOT add any subtopics. Return the existing relevant topic.
3. If your topic is relevant to and more specific than the provided top-level topic, add your topic as a second-level topic. DO NOT add to the first or third level of the hierarchy.

[Topic branch]
{branch}

[Documents]
{documents}

DO NOT add first- or third-level topics.

[Your response]
)";

constexpr std::string_view kRefinement =
    R"(You will receive a list of topics that belong to the same level of a topic hierarchy. Your task is to merge topics that are paraphrases or near duplicates of one another. Return "None" if no modification is needed.

[Examples]
Example 1: Merging topics ("[1] Employer Taxes" and "[1] Employment Tax Reporting" into "[1] Employment Taxes")
Topic List:
[1] Employer Taxes: Mentions taxation policy for employer
[1] Employment Tax Reporting: Mentions reporting requirements for employer
[1] Immigration: Mentions policies and laws on the immigration process
[1] Voting: Mentions rules and regulation for the voting process

Your response:
[1] Employment Taxes: Mentions taxation report and requirement for employer ([1] Employer Taxes, [1] Employment Tax Reporting)

Example 2: Merging topics ([2] Digital Literacy and [2] Telecommunications into [2] Technology)
Topic List:
[2] Mathematics: Discuss mathematical concepts, figures and breakthroughs.
[2] Digital Literacy: Discuss the ability to use technology to find, evaluate, create, and communicate information.
[2] Telecommunications: Mentions policies and regulations related to the telecommunications industry, including wireless service providers and consumer rights.

Your response:
[2] Technology: Discuss technology and its impact on society. ([2] Digital Literacy, [2] Telecommunications)

[Rules]
- Each line represents a topic, with a level indicator and a topic label.
- Perform the following operations as many times as needed:
    - Merge relevant topics into a single topic.
    - Do nothing and return "None" if no modification is needed.
- When merging, the output format should contain a level indicator, the updated label and description, followed by the original topics.

[Topic List]
{topics}

Output the modification or "None" where appropriate. Do not output anything else.

[Your response]
)";

constexpr std::string_view kAssignment =
    R"(You will receive a document and a topic hierarchy. Assign the document to the most relevant topics the hierarchy. Then, output the topic labels, assignment reasoning and supporting quotes from the document. DO NOT make up new topics or quotes.

Here is the topic hierarchy:
{tree}

[Examples]
Example 1: Assign "[1] Agriculture" to the document
Document:
Saving Essential American Sailors Act or SEAS Act - Amends the Moving Ahead for Progress in the 21st Century Act (MAP-21) to repeal the Act's repeal of the agricultural export requirements that: (1) 25% of the gross tonnage of certain agricultural commodities or their products exported each fiscal year be transported on U.S. commercial vessels, and (2) the Secretary of Transportation (DOT) finance any increased ocean freight charges incurred in the transportation of such items.

Your response:
[1] Agriculture: Mentions changes in agricultural export requirements ("...repeal of the agricultural export requirements that...")

Example 2: Assign "[2] Tariff" to the document
Document:
Amends the Harmonized Tariff Schedule of the United States to suspend temporarily the duty on mixtures containing Fluopyram.

Your response:
[1] Trade
    [2] Tariff: Mentions adjusting the taxation on mixtures containing Fluopyram ("...suspend temporarily the duty on mixtures containing Fluopyram.")

[Instructions]
1. Topic labels must be present in the provided topic hierarchy. You MUST NOT make up new topics.
2. The quote must be taken from the document. You MUST NOT make up quotes.
3. If the assigned topic is not on the top level, you must also output the path from the top-level topic to the assigned topic.
{mode_instruction}
[Document]
{document}

Double check that your assignment exists in the hierarchy!
{correction}
[Your response]
)";

}  // namespace

std::string_view generation_text() { return kGeneration; }
std::string_view refinement_text() { return kRefinement; }
std::string_view assignment_text() { return kAssignment; }
std::string_view subtopics_text() { return kSubtopics; }

PromptTemplate generation() {
  return PromptTemplate(std::string(kGeneration), {kTopics, kDocument});
}
PromptTemplate refinement() {
  return PromptTemplate(std::string(kRefinement), {kTopics});
}
PromptTemplate assignment() {
  return PromptTemplate(std::string(kAssignment), {kTree, kDocument});
}
PromptTemplate subtopics() {
  return PromptTemplate(std::string(kSubtopics), {kBranch, kDocuments});
}

}  // namespace prompts

}  // namespace topicllm
