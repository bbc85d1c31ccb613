use serde::{Deserialize, Serialize};

use super::{Clade, RootedTree};
use crate::error::Result;

/// JSON form of a tree: `{children: [...], label, annotation}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<f64>,
}

impl TreeJson {
    fn to_clade(&self) -> Clade {
        if self.children.is_empty() {
            Clade::Leaf(self.label.clone().unwrap_or_default())
        } else {
            Clade::Inner {
                children: self.children.iter().map(TreeJson::to_clade).collect(),
                annotation: self.annotation,
            }
        }
    }

    fn from_clade(clade: &Clade) -> Self {
        match clade {
            Clade::Leaf(l) => TreeJson {
                children: Vec::new(),
                label: Some(l.clone()),
                annotation: None,
            },
            Clade::Inner {
                children,
                annotation,
            } => TreeJson {
                children: children.iter().map(TreeJson::from_clade).collect(),
                label: None,
                annotation: *annotation,
            },
        }
    }
}

impl RootedTree {
    pub fn to_json(&self) -> TreeJson {
        TreeJson::from_clade(&self.to_clade())
    }

    pub fn from_json(json: &TreeJson) -> Result<Self> {
        RootedTree::from_clade(&json.to_clade())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    #[test]
    fn json_round_trip() {
        let t = parse_newick("((A,B)0.5,(C,D,E));").unwrap();
        let text = serde_json::to_string(&t.to_json()).unwrap();
        assert!(text.contains("\"annotation\":0.5"));
        let back: TreeJson = serde_json::from_str(&text).unwrap();
        let back = RootedTree::from_json(&back).unwrap();
        assert!(back.is_isomorphic(&t));
        let bad: TreeJson = serde_json::from_str(r#"{"children":[{"label":"A"}]}"#).unwrap();
        assert!(RootedTree::from_json(&bad).is_err());
    }
}
