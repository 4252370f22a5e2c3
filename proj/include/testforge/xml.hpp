#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace testforge {

// Minimal XML document model, sufficient for Moodle quiz exports. Character
// data directly inside an element is concatenated into `text` (entities and
// CDATA decoded); element order among siblings is preserved in `children`.
struct XmlElement {
    std::string name;
    std::map<std::string, std::string> attributes;
    std::vector<XmlElement> children;
    std::string text;

    const XmlElement* find(std::string_view child_name) const;
    std::vector<const XmlElement*> find_all(std::string_view child_name) const;
    std::string attribute(std::string_view key, std::string_view fallback = "") const;
};

// Parses a well-formed document and returns its root element.
// Throws MalformedXml with line:column context on errors.
XmlElement xml_parse(std::string_view document);

}  // namespace testforge
