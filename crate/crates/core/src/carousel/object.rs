//! MOT objects: one named file travelling in the carousel.

use super::params::HeaderParameter;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("content name {name:?} rejected: {reason}")]
pub struct ContentNameError {
    pub name: String,
    pub reason: &'static str,
}

/// Checks a content name against the path discipline used by this
/// chain: relative, slash separated, no empty or dot components, and
/// no '#' anywhere since that byte separates an entry point from its
/// connector port.
pub fn validate_content_name(name: &str) -> Result<(), ContentNameError> {
    let fail = |reason| {
        Err(ContentNameError { name: name.to_owned(), reason })
    };
    if name.is_empty() {
        return fail("empty name");
    }
    if name.contains('#') {
        return fail("'#' is reserved for entry point ports");
    }
    for component in name.split('/') {
        match component {
            "" => return fail("empty path component"),
            "." | ".." => return fail("dot components are not allowed"),
            _ => {}
        }
    }
    Ok(())
}

/// One file of the application, with its transport identity and the
/// way it should travel.
///
/// `compressed` asks the builder to GZip the body in transit; the body
/// held here is always the plain file content. The type pair is
/// carried for completeness but the chain transmits zeros and never
/// dispatches on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotObject {
    pub transport_id: u16,
    pub content_name: String,
    pub body: Vec<u8>,
    pub compressed: bool,
    pub content_type: u8,
    pub content_sub_type: u16,
    pub extra_params: Vec<HeaderParameter>,
}

impl MotObject {
    pub fn new(
        transport_id: u16,
        content_name: &str,
        body: Vec<u8>,
    ) -> Result<Self, ContentNameError> {
        validate_content_name(content_name)?;
        Ok(MotObject {
            transport_id,
            content_name: content_name.to_owned(),
            body,
            compressed: false,
            content_type: 0,
            content_sub_type: 0,
            extra_params: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_names() {
        for name in ["main.ncl", "media/pic.jpg", "a/b/c/d.lua", "no_extension", "ä.ncl"] {
            assert!(validate_content_name(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn rejected_names() {
        for name in [
            "",
            "/abs.ncl",
            "trailing/",
            "a//b",
            ".",
            "..",
            "a/../b",
            "./a",
            "frag#port",
            "a/b#c",
        ] {
            assert!(validate_content_name(name).is_err(), "{name}");
        }
    }

    #[test]
    fn constructor_validates() {
        assert!(MotObject::new(1, "ok.ncl", vec![]).is_ok());
        let err = MotObject::new(1, "#", vec![]).unwrap_err();
        assert_eq!(err.name, "#");
    }
}
