// Copyright 2026 ITP contributors
// SPDX-License-Identifier: Apache-2.0

#include "itp/xml.hpp"

#include <algorithm>
#include <cctype>

#include "itp/encoding.hpp"
#include "itp/errors.hpp"

namespace itp::xml {

const Node* Node::child(std::string_view child_name) const {
    for (const Node& c : children) {
        if (c.name == child_name) return &c;
    }
    return nullptr;
}

const std::string* Node::attribute(std::string_view attr_name) const {
    for (const auto& [name, value] : attributes) {
        if (name == attr_name) return &value;
    }
    return nullptr;
}

bool Node::text_is_whitespace() const {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
}

bool Node::markup_anywhere() const {
    if (has_markup) return true;
    return std::any_of(children.begin(), children.end(),
                       [](const Node& c) { return c.markup_anywhere(); });
}

namespace {

[[noreturn]] void fail(std::size_t pos, const std::string& what) {
    throw ItpError(Errc::MalformedDocument, what + " at offset " + std::to_string(pos));
}

bool is_name_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c == ':';
}

bool is_name_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == ':' || c == '-' || c == '.';
}

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    Node read() {
        skip_prolog();
        if (eof()) fail(pos_, "no root element");
        if (peek() != '<') fail(pos_, "content outside root element");
        Node root = read_element();
        skip_misc();
        if (!eof()) fail(pos_, "content after root element");
        return root;
    }

private:
    bool eof() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    char peek_at(std::size_t off) const {
        return pos_ + off < in_.size() ? in_[pos_ + off] : '\0';
    }
    char take() { return in_[pos_++]; }

    bool starts_with(std::string_view s) const {
        return in_.compare(pos_, s.size(), s) == 0;
    }

    void expect(char c, const char* what) {
        if (eof() || peek() != c) fail(pos_, std::string("expected ") + what);
        ++pos_;
    }

    void skip_ws() {
        while (!eof()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
                ++pos_;
            else
                break;
        }
    }

    // Comments/PIs/whitespace before and after the root element are skipped;
    // the XML declaration is treated as an ordinary processing instruction.
    void skip_prolog() { skip_misc(); }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                skip_comment();
            } else if (starts_with("<?")) {
                skip_pi();
            } else {
                return;
            }
        }
    }

    void skip_comment() {
        std::size_t start = pos_;
        pos_ += 4;
        std::size_t end = in_.find("-->", pos_);
        if (end == std::string_view::npos) fail(start, "unterminated comment");
        pos_ = end + 3;
    }

    void skip_pi() {
        std::size_t start = pos_;
        pos_ += 2;
        std::size_t end = in_.find("?>", pos_);
        if (end == std::string_view::npos) fail(start, "unterminated processing instruction");
        pos_ = end + 2;
    }

    std::string read_name() {
        if (eof() || !is_name_start(static_cast<unsigned char>(peek())))
            fail(pos_, "invalid name");
        std::size_t start = pos_;
        ++pos_;
        while (!eof() && is_name_char(static_cast<unsigned char>(peek()))) ++pos_;
        return std::string(in_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw, bool in_attribute) {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size();) {
            char c = raw[i];
            if (c == '&') {
                std::size_t semi = raw.find(';', i + 1);
                if (semi == std::string_view::npos) fail(pos_, "unterminated entity reference");
                std::string_view ent = raw.substr(i + 1, semi - i - 1);
                if (ent == "lt") out.push_back('<');
                else if (ent == "gt") out.push_back('>');
                else if (ent == "amp") out.push_back('&');
                else if (ent == "quot") out.push_back('"');
                else if (ent == "apos") out.push_back('\'');
                else if (!ent.empty() && ent[0] == '#') append_char_ref(out, ent);
                else fail(pos_, "unknown entity &" + std::string(ent) + ";");
                i = semi + 1;
            } else if (c == '<') {
                fail(pos_, "raw '<' in character data");
            } else {
                if (!in_attribute && c == ']' && raw.compare(i, 3, "]]>") == 0)
                    fail(pos_, "']]>' in character data");
                out.push_back(c);
                ++i;
            }
        }
        return out;
    }

    void append_char_ref(std::string& out, std::string_view ent) {
        std::uint32_t cp = 0;
        bool ok = ent.size() > 1;
        if (ent.size() > 2 && (ent[1] == 'x' || ent[1] == 'X')) {
            for (std::size_t i = 2; i < ent.size() && ok; ++i) {
                char c = ent[i];
                int v = (c >= '0' && c <= '9')   ? c - '0'
                        : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                        : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                                 : -1;
                if (v < 0) ok = false;
                else cp = cp * 16 + static_cast<std::uint32_t>(v);
            }
        } else {
            for (std::size_t i = 1; i < ent.size() && ok; ++i) {
                char c = ent[i];
                if (c < '0' || c > '9') ok = false;
                else cp = cp * 10 + static_cast<std::uint32_t>(c - '0');
            }
        }
        if (!ok || cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
            fail(pos_, "invalid character reference");
        // encode as UTF-8
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    Attributes read_attributes() {
        Attributes attrs;
        for (;;) {
            skip_ws();
            if (eof()) fail(pos_, "unterminated start tag");
            char c = peek();
            if (c == '>' || c == '/') return attrs;
            std::string name = read_name();
            skip_ws();
            expect('=', "'=' after attribute name");
            skip_ws();
            if (eof() || (peek() != '"' && peek() != '\''))
                fail(pos_, "expected quoted attribute value");
            char quote = take();
            std::size_t start = pos_;
            while (!eof() && peek() != quote) {
                if (peek() == '<') fail(pos_, "raw '<' in attribute value");
                ++pos_;
            }
            if (eof()) fail(start, "unterminated attribute value");
            std::string value = decode_entities(in_.substr(start, pos_ - start), true);
            ++pos_;  // closing quote
            for (const auto& [existing, _] : attrs) {
                if (existing == name) fail(start, "duplicate attribute " + name);
            }
            attrs.emplace_back(std::move(name), std::move(value));
        }
    }

    Node read_element() {
        expect('<', "'<'");
        Node node;
        node.name = read_name();
        node.attributes = read_attributes();
        if (peek() == '/') {
            ++pos_;
            expect('>', "'>' after '/'");
            return node;  // empty-element tag
        }
        expect('>', "'>'");
        read_content(node);
        return node;
    }

    void read_content(Node& node) {
        std::size_t text_start = pos_;
        auto flush_text = [&](std::size_t end) {
            if (end > text_start)
                node.text += decode_entities(in_.substr(text_start, end - text_start), false);
        };
        for (;;) {
            if (eof()) fail(pos_, "unterminated element <" + node.name + ">");
            if (peek() != '<') {
                ++pos_;
                continue;
            }
            if (starts_with("</")) {
                flush_text(pos_);
                pos_ += 2;
                std::string name = read_name();
                if (name != node.name)
                    fail(pos_, "mismatched end tag </" + name + "> for <" + node.name + ">");
                skip_ws();
                expect('>', "'>' in end tag");
                return;
            }
            if (starts_with("<!--")) {
                flush_text(pos_);
                skip_comment();
                node.has_markup = true;
                text_start = pos_;
                continue;
            }
            if (starts_with("<?")) {
                flush_text(pos_);
                skip_pi();
                node.has_markup = true;
                text_start = pos_;
                continue;
            }
            if (starts_with("<!")) fail(pos_, "unsupported markup declaration");
            flush_text(pos_);
            node.children.push_back(read_element());
            text_start = pos_;
        }
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

Node read_document(std::string_view bytes) {
    if (!is_valid_utf8(bytes))
        throw ItpError(Errc::MalformedDocument, "document is not valid UTF-8");
    for (unsigned char c : bytes) {
        if (c < 0x20 && c != '\t' && c != '\n' && c != '\r')
            throw ItpError(Errc::MalformedDocument, "control character in document");
    }
    return Reader(bytes).read();
}

std::string escape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string escape_attribute(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

void Writer::write_start_tag(std::string_view name, const Attributes& attrs) {
    out_.push_back('<');
    out_.append(name);
    for (const auto& [attr, value] : attrs) {
        out_.push_back(' ');
        out_.append(attr);
        out_.append("=\"");
        out_.append(escape_attribute(value));
        out_.push_back('"');
    }
    out_.push_back('>');
}

Writer& Writer::open(std::string_view name, const Attributes& attrs) {
    write_start_tag(name, attrs);
    return *this;
}

Writer& Writer::close(std::string_view name) {
    out_.append("</");
    out_.append(name);
    out_.push_back('>');
    return *this;
}

Writer& Writer::text(std::string_view value) {
    out_.append(escape_text(value));
    return *this;
}

Writer& Writer::leaf(std::string_view name, std::string_view value, const Attributes& attrs) {
    write_start_tag(name, attrs);
    text(value);
    close(name);
    return *this;
}

namespace {

void write_node_canonical(Writer& w, const Node& node) {
    w.open(node.name, node.attributes);
    if (node.children.empty()) {
        w.text(node.text);
    } else {
        for (const Node& c : node.children) write_node_canonical(w, c);
    }
    w.close(node.name);
}

void write_node_pretty(std::string& out, const Node& node, int depth) {
    std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    out += indent;
    out.push_back('<');
    out += node.name;
    for (const auto& [attr, value] : node.attributes) {
        out.push_back(' ');
        out += attr;
        out += "=\"";
        out += escape_attribute(value);
        out.push_back('"');
    }
    out.push_back('>');
    if (node.children.empty()) {
        out += escape_text(node.text);
    } else {
        out.push_back('\n');
        for (const Node& c : node.children) write_node_pretty(out, c, depth + 1);
        out += indent;
    }
    out += "</";
    out += node.name;
    out += ">\n";
}

}  // namespace

std::string write_canonical(const Node& node) {
    Writer w;
    write_node_canonical(w, node);
    return w.take();
}

std::string write_pretty(const Node& node) {
    std::string out;
    write_node_pretty(out, node, 0);
    return out;
}

} // namespace itp::xml
