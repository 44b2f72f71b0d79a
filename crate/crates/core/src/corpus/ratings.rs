use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};

use crate::corpus::IdMap;
use crate::error::{Error, Result};

/// Explicit star ratings, used only as input to group synthesis.
#[derive(Debug, Clone, Default)]
pub struct RatingsTable {
    pub users: IdMap,
    pub items: IdMap,
    /// Per user, `(item, stars)` sorted by item index.
    by_user: Vec<Vec<(usize, u8)>>,
}

impl RatingsTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a rating. A second rating for the same (user, item) is rejected.
    pub fn insert(&mut self, user: &str, item: &str, stars: u8) -> Result<()> {
        if !(1..=5).contains(&stars) {
            return Err(Error::InvalidArgument(format!("stars must be 1-5, got {stars}")));
        }
        let u = self.users.intern(user);
        let i = self.items.intern(item);
        if u == self.by_user.len() {
            self.by_user.push(Vec::new());
        }
        let row = &mut self.by_user[u];
        match row.binary_search_by_key(&i, |&(it, _)| it) {
            Ok(_) => Err(Error::InvalidArgument(format!(
                "duplicate rating for user {user:?} item {item:?}"
            ))),
            Err(pos) => {
                row.insert(pos, (i, stars));
                Ok(())
            }
        }
    }

    /// Reads `user_id<TAB>item_id<TAB>stars` lines.
    pub fn read_tsv<R: Read>(source: R) -> Result<Self> {
        let mut table = RatingsTable::new();
        let mut seen = HashSet::new();
        for (lineno, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let [user, item, stars] = f[..] else {
                return Err(Error::parse(lineno, "expected user<TAB>item<TAB>stars"));
            };
            if user.is_empty() || item.is_empty() {
                return Err(Error::parse(lineno, "empty id"));
            }
            let stars: u8 = stars
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad star value {stars:?}")))?;
            if !seen.insert((user.to_owned(), item.to_owned())) {
                return Err(Error::parse(lineno, "duplicate (user, item) rating"));
            }
            table
                .insert(user, item, stars)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        if table.is_empty() {
            return Err(Error::Empty("ratings stream has no ratings".into()));
        }
        Ok(table)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_user.iter().all(Vec::is_empty)
    }

    pub fn user_ratings(&self, user: usize) -> &[(usize, u8)] {
        &self.by_user[user]
    }

    pub fn rating(&self, user: usize, item: usize) -> Option<u8> {
        let row = &self.by_user[user];
        row.binary_search_by_key(&item, |&(it, _)| it).ok().map(|p| row[p].1)
    }
}
