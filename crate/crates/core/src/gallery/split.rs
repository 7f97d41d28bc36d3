use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitRole {
    Train,
    Test,
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitRole::Train => "train",
            SplitRole::Test => "test",
        })
    }
}

impl std::str::FromStr for SplitRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitRole::Train),
            "test" => Ok(SplitRole::Test),
            other => Err(Error::Argument(format!("split role must be train or test, got {other:?}"))),
        }
    }
}

/// Identity-disjoint train/test assignment; every identity has exactly one
/// role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    roles: Vec<(String, SplitRole)>,
}

impl Split {
    pub fn new(roles: Vec<(String, SplitRole)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (id, _) in &roles {
            if !seen.insert(id.as_str()) {
                return Err(Error::Argument(format!("identity {id:?} appears twice in split")));
            }
        }
        Ok(Split { roles })
    }

    /// Seeded half/half split; the train side gets the extra identity when
    /// the count is odd. Roles are listed in input order.
    pub fn random(ids: &[String], seed: u64) -> Result<Self> {
        Split::with_ratio(ids, 0.5, seed)
    }

    /// Seeded split with `ceil(ratio * n)` train identities.
    pub fn with_ratio(ids: &[String], ratio: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::Argument(format!("train ratio {ratio} is outside [0, 1]")));
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let train_count = ((ids.len() as f64 * ratio).ceil() as usize).min(ids.len());
        let mut roles: Vec<_> = ids.iter().map(|id| (id.clone(), SplitRole::Test)).collect();
        for &i in &order[..train_count] {
            roles[i].1 = SplitRole::Train;
        }
        Split::new(roles)
    }

    pub fn roles(&self) -> &[(String, SplitRole)] {
        &self.roles
    }

    pub fn ids(&self, role: SplitRole) -> Vec<String> {
        self.roles
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn train(&self) -> Vec<String> {
        self.ids(SplitRole::Train)
    }

    pub fn test(&self) -> Vec<String> {
        self.ids(SplitRole::Test)
    }

    pub fn to_text(&self) -> String {
        self.roles.iter().map(|(id, r)| format!("{id}\t{r}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let roles = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, line)| {
                let (id, role) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::Argument(format!("split line {}: expected id<TAB>role", n + 1)))?;
                Ok((id.to_string(), role.trim().parse()?))
            })
            .collect::<Result<_>>()?;
        Split::new(roles)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Split::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
