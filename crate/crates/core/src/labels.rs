//! Demographic and provenance labels attached to reference faces.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

macro_rules! closed_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Precondition(format!(
                        concat!("unknown ", stringify!($name), " {:?}"),
                        other
                    ))),
                }
            }
        }
    };
}

closed_enum!(
    /// Age bracket: 16-35, 35-60, 60+.
    AgeBucket {
        YoungAdult => "young_adult",
        MiddleAged => "middle_aged",
        Aged => "aged",
    }
);

closed_enum!(Gender {
    Male => "male",
    Female => "female",
});

closed_enum!(Ethnicity {
    White => "white",
    Black => "black",
    SouthAsian => "south_asian",
    EastAsian => "east_asian",
    Hispanic => "hispanic",
    MiddleEastern => "middle_eastern",
});

closed_enum!(Status {
    Anonymous => "anonymous",
    Celebrity => "celebrity",
});

closed_enum!(DataOrigin {
    Real => "real",
    Synthetic => "synthetic",
});

/// Labels for one reference face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeLabel {
    pub age: AgeBucket,
    pub gender: Gender,
    pub ethnicity: Ethnicity,
    pub status: Status,
    pub origin: DataOrigin,
}

/// The labelled attributes, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Age,
    Gender,
    Ethnicity,
    Status,
    Origin,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Age,
        Attribute::Gender,
        Attribute::Ethnicity,
        Attribute::Status,
        Attribute::Origin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Age => "age",
            Attribute::Gender => "gender",
            Attribute::Ethnicity => "ethnicity",
            Attribute::Status => "status",
            Attribute::Origin => "origin",
        }
    }

    /// All bucket names of this attribute.
    pub fn buckets(self) -> Vec<&'static str> {
        match self {
            Attribute::Age => AgeBucket::ALL.iter().map(|v| v.as_str()).collect(),
            Attribute::Gender => Gender::ALL.iter().map(|v| v.as_str()).collect(),
            Attribute::Ethnicity => Ethnicity::ALL.iter().map(|v| v.as_str()).collect(),
            Attribute::Status => Status::ALL.iter().map(|v| v.as_str()).collect(),
            Attribute::Origin => DataOrigin::ALL.iter().map(|v| v.as_str()).collect(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl AttributeLabel {
    /// Bucket name of `attr` for this label.
    pub fn bucket(&self, attr: Attribute) -> &'static str {
        match attr {
            Attribute::Age => self.age.as_str(),
            Attribute::Gender => self.gender.as_str(),
            Attribute::Ethnicity => self.ethnicity.as_str(),
            Attribute::Status => self.status.as_str(),
            Attribute::Origin => self.origin.as_str(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_values_are_rejected() {
        assert!("elderly".parse::<AgeBucket>().is_err());
        let err = serde_json::from_str::<AttributeLabel>(
            r#"{"age":"aged","gender":"other","ethnicity":"white","status":"anonymous","origin":"real"}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn label_round_trips() {
        let json = r#"{"age":"middle_aged","gender":"female","ethnicity":"south_asian","status":"celebrity","origin":"synthetic"}"#;
        let label: AttributeLabel = serde_json::from_str(json).unwrap();
        assert_eq!(label.bucket(Attribute::Ethnicity), "south_asian");
        assert_eq!(serde_json::to_string(&label).unwrap(), json);
    }

    #[test]
    fn bucket_lists() {
        assert_eq!(Attribute::Ethnicity.buckets().len(), 6);
        assert_eq!(Attribute::Age.buckets(), ["young_adult", "middle_aged", "aged"]);
    }
}
