//! Static checks for NCL documents against the Digital Radio profile.
//!
//! The radio profile trims the television profile: no video planes,
//! no visual transitions, no spatial anchors, no screen geometry
//! variables and no broadcast filesystem schemes. The checker walks
//! the XML tree and flags the trimmed constructs; it does not chase
//! references or validate NCL structure beyond well-formedness.
//!
//! Rules:
//!
//! ```text
//! transition-removed    <transition>/<transitionBase> elements
//! property-removed      transIn/transOut/plane as property,
//!                       descriptorParam or descriptor attribute
//! area-attr-removed     clip/coords attributes on <area>
//! settings-var-removed  screenVideoSize/screenBackgroundSize/
//!                       screenGraphicSize[(i)] settings variables,
//!                       bare or system. prefixed
//! metadata-var-removed  metadata settings variable group
//! scheme-unsupported    dsm-cc: and ts: source schemes
//! bad-tbv-literal       area timing values that are neither a tbv
//!                       literal nor a clock value
//! ```
//!
//! Of the settings variable groups the profile keeps the si group:
//! stationLabel, numberOfServices, channelFrequency, signalQuality
//! and serviceDecoding.

use crate::adm::{parse_tbv_literal, TbvError};
use roxmltree::{Document, Node};
use std::fmt;
use thiserror::Error;

pub mod rules {
    pub const TRANSITION_REMOVED: &str = "transition-removed";
    pub const PROPERTY_REMOVED: &str = "property-removed";
    pub const AREA_ATTR_REMOVED: &str = "area-attr-removed";
    pub const SETTINGS_VAR_REMOVED: &str = "settings-var-removed";
    pub const METADATA_VAR_REMOVED: &str = "metadata-var-removed";
    pub const SCHEME_UNSUPPORTED: &str = "scheme-unsupported";
    pub const BAD_TBV_LITERAL: &str = "bad-tbv-literal";
}

/// Service information variables available to documents under this
/// profile.
pub const SI_VARIABLES: [&str; 5] = [
    "stationLabel",
    "numberOfServices",
    "channelFrequency",
    "signalQuality",
    "serviceDecoding",
];

const SETTINGS_MEDIA_TYPE: &str = "application/x-ncl-settings";
const REMOVED_PROPERTIES: [&str; 3] = ["transIn", "transOut", "plane"];
const REMOVED_SCHEMES: [&str; 2] = ["dsm-cc:", "ts:"];
const AREA_TIMING_ATTRS: [&str; 4] = ["begin", "end", "first", "last"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// One flagged construct. Line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub line: u32,
    pub column: u32,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {} [{}] {}",
            self.line, self.column, self.severity, self.rule, self.message
        )
    }
}

#[derive(Debug, Error)]
#[error("malformed document at {line}:{column}: {message}")]
pub struct MalformedDocument {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

/// Checks one document. An unparseable document is an error; a
/// parseable one yields the list of profile violations in document
/// order, empty when it conforms.
pub fn validate_ncl(document: &str) -> Result<Vec<Violation>, MalformedDocument> {
    let doc = Document::parse(document).map_err(|err| {
        let pos = err.pos();
        MalformedDocument { line: pos.row, column: pos.col, message: err.to_string() }
    })?;

    let mut check = Checker { doc: &doc, violations: Vec::new() };
    for node in doc.descendants().filter(Node::is_element) {
        check.element(node);
    }
    let mut violations = check.violations;
    violations.sort_by(|a, b| (a.line, a.column, a.rule).cmp(&(b.line, b.column, b.rule)));
    Ok(violations)
}

struct Checker<'a, 'input> {
    doc: &'a Document<'input>,
    violations: Vec<Violation>,
}

impl Checker<'_, '_> {
    fn element(&mut self, node: Node) {
        let tag = node.tag_name().name();
        match tag {
            "transition" | "transitionBase" => self.flag_node(
                node,
                rules::TRANSITION_REMOVED,
                format!("<{tag}> has no effect on a radio receiver"),
            ),
            "area" => self.area(node),
            "property" | "descriptorParam" => self.named_variable(node, tag),
            _ => {}
        }
        for attr in node.attributes() {
            if tag == "descriptor" && REMOVED_PROPERTIES.contains(&attr.name()) {
                self.flag_attr(
                    node,
                    attr.name(),
                    rules::PROPERTY_REMOVED,
                    format!("descriptor attribute {:?} is removed from this profile", attr.name()),
                );
            }
            if let Some(scheme) =
                REMOVED_SCHEMES.iter().find(|scheme| attr.value().starts_with(*scheme))
            {
                self.flag_attr(
                    node,
                    attr.name(),
                    rules::SCHEME_UNSUPPORTED,
                    format!("{scheme} sources do not exist on this chain; use drm: or relative paths"),
                );
            }
        }
    }

    fn area(&mut self, node: Node) {
        for name in ["clip", "coords"] {
            if node.has_attribute(name) {
                self.flag_attr(
                    node,
                    name,
                    rules::AREA_ATTR_REMOVED,
                    format!("spatial anchor attribute {name:?} needs a video plane"),
                );
            }
        }
        for name in AREA_TIMING_ATTRS {
            let Some(value) = node.attribute(name) else { continue };
            let problem = match timing_value_problem(value) {
                None => continue,
                Some(problem) => problem,
            };
            self.flag_attr(
                node,
                name,
                rules::BAD_TBV_LITERAL,
                format!("{name}={value:?}: {problem}"),
            );
        }
    }

    fn named_variable(&mut self, node: Node, tag: &str) {
        let Some(name) = node.attribute("name") else { return };
        if REMOVED_PROPERTIES.contains(&name) {
            self.flag_node(
                node,
                rules::PROPERTY_REMOVED,
                format!("{name:?} drives transitions or planes, removed from this profile"),
            );
            return;
        }
        if tag != "property" || !self.inside_settings(node) {
            return;
        }
        let base = name.strip_prefix("system.").unwrap_or(name);
        let screen_geometry = base == "screenVideoSize"
            || base == "screenBackgroundSize"
            || base == "screenGraphicSize"
            || base.starts_with("screenGraphicSize(");
        if screen_geometry {
            self.flag_node(
                node,
                rules::SETTINGS_VAR_REMOVED,
                format!("settings variable {name:?} describes a screen this receiver lacks"),
            );
        } else if base == "metadata" || base.starts_with("metadata.") {
            self.flag_node(
                node,
                rules::METADATA_VAR_REMOVED,
                format!("settings variable {name:?}: the metadata group is not defined in this profile"),
            );
        }
    }

    fn inside_settings(&self, node: Node) -> bool {
        node.ancestors().any(|a| {
            a.tag_name().name() == "media" && a.attribute("type") == Some(SETTINGS_MEDIA_TYPE)
        })
    }

    fn flag_node(&mut self, node: Node, rule: &'static str, message: String) {
        let pos = self.doc.text_pos_at(node.range().start);
        self.push(rule, pos.row, pos.col, message);
    }

    fn flag_attr(&mut self, node: Node, attr: &str, rule: &'static str, message: String) {
        let pos = node
            .attributes()
            .find(|a| a.name() == attr)
            .map(|a| self.doc.text_pos_at(a.range().start))
            .unwrap_or_else(|| self.doc.text_pos_at(node.range().start));
        self.push(rule, pos.row, pos.col, message);
    }

    fn push(&mut self, rule: &'static str, line: u32, column: u32, message: String) {
        self.violations.push(Violation { rule, line, column, message, severity: Severity::Error });
    }
}

/// Why a timing attribute value is unusable, or None when it is fine.
fn timing_value_problem(value: &str) -> Option<&'static str> {
    if value.ends_with("tbv") {
        return match parse_tbv_literal(value) {
            Ok(_) => None,
            Err(TbvError::OutOfRange(_)) => Some("time base values wrap at 2^33"),
            Err(TbvError::BadLiteral(_)) => Some("tbv literals are plain decimal digits"),
        };
    }
    if is_clock_value(value) {
        None
    } else {
        Some("neither a tbv literal nor a clock value")
    }
}

fn is_clock_value(value: &str) -> bool {
    if value.contains(':') {
        return is_hms(value);
    }
    if let Some(frames) = value.strip_suffix('f') {
        return all_digits(frames);
    }
    is_decimal(value.strip_suffix('s').unwrap_or(value))
}

fn is_hms(value: &str) -> bool {
    let Some((hours, rest)) = value.split_once(':') else { return false };
    let Some((minutes, seconds)) = rest.split_once(':') else { return false };
    let (seconds, fraction) = match seconds.split_once('.') {
        Some((s, f)) => (s, Some(f)),
        None => (seconds, None),
    };
    all_digits(hours)
        && all_digits(minutes)
        && minutes.len() <= 2
        && all_digits(seconds)
        && seconds.len() <= 2
        && fraction.is_none_or(all_digits)
}

fn is_decimal(value: &str) -> bool {
    match value.split_once('.') {
        Some((whole, fraction)) => all_digits(whole) && all_digits(fraction),
        None => all_digits(value),
    }
}

fn all_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}
