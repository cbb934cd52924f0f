//! Shared tokenizer for the `kind:key=value,...` spec strings.

use crate::error::ParseError;

pub(crate) struct KindSpec<'a> {
    pub kind: &'a str,
    pub params: Vec<(&'a str, f64, usize)>,
}

impl<'a> KindSpec<'a> {
    pub fn parse(input: &'a str) -> Result<Self, ParseError> {
        let trimmed = input.trim();
        let lead = input.len() - input.trim_start().len();
        if trimmed.is_empty() {
            return Err(ParseError::new(0, "empty spec"));
        }
        let (kind, rest, rest_offset) = match trimmed.find(':') {
            Some(i) => (&trimmed[..i], &trimmed[i + 1..], lead + i + 1),
            None => (trimmed, "", lead + trimmed.len()),
        };
        let kind = kind.trim();
        if kind.is_empty() {
            return Err(ParseError::new(lead, "missing kind"));
        }
        let mut params = Vec::new();
        if !rest.trim().is_empty() {
            let mut offset = rest_offset;
            for item in rest.split(',') {
                let Some(eq) = item.find('=') else {
                    return Err(ParseError::new(offset, format!("expected key=value, got {item:?}")));
                };
                let key = item[..eq].trim();
                let raw = item[eq + 1..].trim();
                if key.is_empty() {
                    return Err(ParseError::new(offset, "empty key"));
                }
                let value: f64 = raw
                    .parse()
                    .map_err(|_| ParseError::new(offset + eq + 1, format!("invalid number {raw:?}")))?;
                if !value.is_finite() {
                    return Err(ParseError::new(offset + eq + 1, format!("non-finite value for {key}")));
                }
                if params.iter().any(|(k, _, _)| *k == key) {
                    return Err(ParseError::new(offset, format!("duplicate key {key:?}")));
                }
                params.push((key, value, offset));
                offset += item.len() + 1;
            }
        }
        Ok(KindSpec { kind, params })
    }

    pub fn take(&mut self, key: &str) -> Option<f64> {
        let i = self.params.iter().position(|(k, _, _)| *k == key)?;
        Some(self.params.remove(i).1)
    }

    pub fn require(&mut self, key: &str) -> Result<f64, ParseError> {
        self.take(key)
            .ok_or_else(|| ParseError::new(0, format!("{} requires parameter {key:?}", self.kind)))
    }

    pub fn finish(self) -> Result<(), ParseError> {
        match self.params.first() {
            Some((k, _, off)) => Err(ParseError::new(*off, format!("unknown parameter {k:?} for {}", self.kind))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_kind_and_params() {
        let mut spec = KindSpec::parse(" power: theta=0.5, p=2 ").unwrap();
        assert_eq!(spec.kind, "power");
        assert_eq!(spec.take("p"), Some(2.0));
        assert_eq!(spec.require("theta").unwrap(), 0.5);
        spec.finish().unwrap();
    }

    #[test]
    fn rejects_garbage() {
        assert!(KindSpec::parse("").is_err());
        assert!(KindSpec::parse(":p=1").is_err());
        assert!(KindSpec::parse("power:p").is_err());
        assert!(KindSpec::parse("power:p=x").is_err());
        assert!(KindSpec::parse("power:p=inf").is_err());
        assert!(KindSpec::parse("power:p=1,p=2").is_err());
    }
}
