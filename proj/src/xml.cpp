#include "testforge/xml.hpp"

#include <cctype>

#include "testforge/errors.hpp"

namespace testforge {

const XmlElement* XmlElement::find(std::string_view child_name) const {
    for (const auto& c : children)
        if (c.name == child_name) return &c;
    return nullptr;
}

std::vector<const XmlElement*> XmlElement::find_all(std::string_view child_name) const {
    std::vector<const XmlElement*> out;
    for (const auto& c : children)
        if (c.name == child_name) out.push_back(&c);
    return out;
}

std::string XmlElement::attribute(std::string_view key, std::string_view fallback) const {
    auto it = attributes.find(std::string(key));
    return it == attributes.end() ? std::string(fallback) : it->second;
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view doc) : doc_(doc) {}

    XmlElement parse_document() {
        skip_prolog();
        XmlElement root = parse_element();
        skip_misc();
        if (pos_ != doc_.size()) fail("trailing content after document element");
        return root;
    }

private:
    std::string_view doc_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& message) const {
        size_t line = 1, col = 1;
        for (size_t i = 0; i < pos_ && i < doc_.size(); ++i) {
            if (doc_[i] == '\n') { ++line; col = 1; } else ++col;
        }
        throw MalformedXml("line " + std::to_string(line) + ", column " + std::to_string(col) +
                           ": " + message);
    }

    bool eof() const { return pos_ >= doc_.size(); }
    char peek() const { return doc_[pos_]; }
    bool lookahead(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }

    void expect(std::string_view s) {
        if (!lookahead(s)) fail("expected '" + std::string(s) + "'");
        pos_ += s.size();
    }

    void skip_comment() {
        expect("<!--");
        size_t end = doc_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
    }

    void skip_prolog() {
        skip_ws();
        if (lookahead("<?xml")) {
            size_t end = doc_.find("?>", pos_);
            if (end == std::string_view::npos) fail("unterminated xml declaration");
            pos_ = end + 2;
        }
        skip_misc();
        if (lookahead("<!DOCTYPE")) {
            size_t end = doc_.find('>', pos_);
            if (end == std::string_view::npos) fail("unterminated DOCTYPE");
            pos_ = end + 1;
            skip_misc();
        }
        if (eof() || peek() != '<') fail("expected document element");
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (lookahead("<!--")) skip_comment();
            else if (lookahead("<?")) {
                size_t end = doc_.find("?>", pos_);
                if (end == std::string_view::npos) fail("unterminated processing instruction");
                pos_ = end + 2;
            } else break;
        }
    }

    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
               c == '.' || c == ':';
    }

    std::string parse_name() {
        size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        if (pos_ == start) fail("expected name");
        return std::string(doc_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw) {
        std::string out;
        out.reserve(raw.size());
        for (size_t i = 0; i < raw.size();) {
            if (raw[i] != '&') {
                out.push_back(raw[i++]);
                continue;
            }
            size_t semi = raw.find(';', i);
            if (semi == std::string_view::npos) fail("unterminated entity reference");
            std::string_view ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "lt") out.push_back('<');
            else if (ent == "gt") out.push_back('>');
            else if (ent == "amp") out.push_back('&');
            else if (ent == "quot") out.push_back('"');
            else if (ent == "apos") out.push_back('\'');
            else if (!ent.empty() && ent[0] == '#') {
                unsigned long code = 0;
                try {
                    code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                               ? std::stoul(std::string(ent.substr(2)), nullptr, 16)
                               : std::stoul(std::string(ent.substr(1)), nullptr, 10);
                } catch (...) {
                    fail("bad character reference '&" + std::string(ent) + ";'");
                }
                append_utf8(out, code);
            } else {
                fail("unknown entity '&" + std::string(ent) + ";'");
            }
            i = semi + 1;
        }
        return out;
    }

    static void append_utf8(std::string& out, unsigned long code) {
        if (code < 0x80) {
            out.push_back(static_cast<char>(code));
        } else if (code < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (code >> 6)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (code >> 12)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (code >> 18)));
            out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        }
    }

    std::string parse_attribute_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        char quote = peek();
        ++pos_;
        size_t start = pos_;
        while (!eof() && peek() != quote) ++pos_;
        if (eof()) fail("unterminated attribute value");
        std::string value = decode_entities(doc_.substr(start, pos_ - start));
        ++pos_;
        return value;
    }

    XmlElement parse_element() {
        expect("<");
        XmlElement el;
        el.name = parse_name();
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag for <" + el.name + ">");
            if (lookahead("/>")) {
                pos_ += 2;
                return el;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            std::string attr = parse_name();
            skip_ws();
            expect("=");
            skip_ws();
            el.attributes[attr] = parse_attribute_value();
        }
        // content
        for (;;) {
            if (eof()) fail("missing end tag for <" + el.name + ">");
            if (lookahead("<![CDATA[")) {
                pos_ += 9;
                size_t end = doc_.find("]]>", pos_);
                if (end == std::string_view::npos) fail("unterminated CDATA section");
                el.text.append(doc_.substr(pos_, end - pos_));
                pos_ = end + 3;
            } else if (lookahead("<!--")) {
                skip_comment();
            } else if (lookahead("</")) {
                pos_ += 2;
                std::string closing = parse_name();
                if (closing != el.name)
                    fail("mismatched end tag </" + closing + "> for <" + el.name + ">");
                skip_ws();
                expect(">");
                return el;
            } else if (peek() == '<') {
                el.children.push_back(parse_element());
            } else {
                size_t start = pos_;
                while (!eof() && peek() != '<') ++pos_;
                el.text += decode_entities(doc_.substr(start, pos_ - start));
            }
        }
    }
};

}  // namespace

XmlElement xml_parse(std::string_view document) { return Parser(document).parse_document(); }

}  // namespace testforge
