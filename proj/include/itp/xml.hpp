// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef ITP_XML_HPP
#define ITP_XML_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Minimal XML reader/writer for the document subset ITP uses: elements,
// attributes, character data, the five named entities plus numeric character
// references, comments and processing instructions. Namespace prefixes are
// treated as literal name text (ds:Signature is just a name). No DTDs, no
// CDATA sections.

namespace itp::xml {

using Attributes = std::vector<std::pair<std::string, std::string>>;

struct Node {
    std::string name;
    Attributes attributes;       // document order
    std::vector<Node> children;  // element children
    std::string text;            // concatenated character data, entity-decoded
    bool has_markup = false;     // a comment or processing instruction occurred inside

    const Node* child(std::string_view child_name) const;
    const std::string* attribute(std::string_view attr_name) const;
    bool text_is_whitespace() const;
    bool markup_anywhere() const;  // this node or any descendant has has_markup
};

// Parses one document and returns its root element.
// Throws ItpError(MalformedDocument) on any well-formedness problem; also
// rejects input that is not valid UTF-8.
Node read_document(std::string_view bytes);

std::string escape_text(std::string_view text);       // & < >
std::string escape_attribute(std::string_view text);  // & < > "

// Canonical writer: no declaration, no inserted whitespace, explicit end
// tags everywhere, attributes in the order given. Equal call sequences yield
// identical bytes.
class Writer {
public:
    Writer& open(std::string_view name, const Attributes& attrs = {});
    Writer& close(std::string_view name);
    Writer& text(std::string_view value);                  // escaped character data
    Writer& leaf(std::string_view name, std::string_view value, const Attributes& attrs = {});

    const std::string& str() const { return out_; }
    std::string take() { return std::move(out_); }

private:
    void write_start_tag(std::string_view name, const Attributes& attrs);
    std::string out_;
};

// Re-emits a tree in canonical form (writer rules above, children and
// attributes in stored order).
std::string write_canonical(const Node& node);

// Human-readable form, 2-space indent. Elements without element children
// stay on one line so character data round-trips byte-exactly.
std::string write_pretty(const Node& node);

} // namespace itp::xml

#endif // ITP_XML_HPP
