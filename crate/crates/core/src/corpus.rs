//! The client × library dependency matrix.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::simindex::UsageVector;
use crate::{Error, Result};

/// A library coordinate, normalized to lowercase (`group:artifact` when it
/// comes from a manifest).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LibraryId(String);

impl LibraryId {
    pub fn new(raw: &str) -> Result<Self> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        Ok(LibraryId(s.to_lowercase()))
    }

    /// Builds the `group:artifact` coordinate of a manifest dependency.
    pub fn from_coordinates(group: &str, artifact: &str) -> Result<Self> {
        let (g, a) = (group.trim(), artifact.trim());
        if g.is_empty() || a.is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        Self::new(&alloc::format!("{g}:{a}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Splits into `(group, artifact)` when the id has exactly one `:`.
    pub fn group_artifact(&self) -> Option<(&str, &str)> {
        let (g, a) = self.0.split_once(':')?;
        (!g.is_empty() && !a.is_empty() && !a.contains(':')).then_some((g, a))
    }
}

impl fmt::Display for LibraryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClientId(String);

impl ClientId {
    pub fn new(raw: &str) -> Result<Self> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        Ok(ClientId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Binary usage matrix: one [`UsageVector`] per library over the client axis.
///
/// Row and column order is the order in which clients and libraries were
/// first added, and every derived matrix preserves relative order.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyMatrix {
    clients: Vec<ClientId>,
    libraries: Vec<LibraryId>,
    usage: Vec<UsageVector>,
    client_index: BTreeMap<ClientId, usize>,
    library_index: BTreeMap<LibraryId, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub client_count: usize,
    pub library_count: usize,
    pub avg_libs_per_client: f64,
    pub median_libs_per_client: f64,
}

/// Incremental construction of a [`DependencyMatrix`].
#[derive(Debug, Default)]
pub struct MatrixBuilder {
    clients: Vec<ClientId>,
    libraries: Vec<LibraryId>,
    rows: Vec<Vec<usize>>,
    client_index: BTreeMap<ClientId, usize>,
    library_index: BTreeMap<LibraryId, usize>,
}

impl MatrixBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a library column up front (CSV headers). Libraries declared
    /// this way are kept even if no client uses them.
    pub fn declare_library(&mut self, lib: LibraryId) -> Result<usize> {
        if self.library_index.contains_key(&lib) {
            return Err(Error::DuplicateLibrary(lib.0));
        }
        Ok(self.intern(lib))
    }

    fn intern(&mut self, lib: LibraryId) -> usize {
        if let Some(&i) = self.library_index.get(&lib) {
            return i;
        }
        let i = self.libraries.len();
        self.library_index.insert(lib.clone(), i);
        self.libraries.push(lib);
        i
    }

    /// Adds a client row. Unknown libraries get new columns; repeats within
    /// one row are ignored.
    pub fn add_client<I>(&mut self, client: ClientId, libraries: I) -> Result<()>
    where
        I: IntoIterator<Item = LibraryId>,
    {
        if self.client_index.contains_key(&client) {
            return Err(Error::DuplicateClient(client.0));
        }
        let row: Vec<usize> = libraries.into_iter().map(|l| self.intern(l)).collect();
        self.client_index.insert(client.clone(), self.clients.len());
        self.clients.push(client);
        self.rows.push(row);
        Ok(())
    }

    pub fn build(self) -> DependencyMatrix {
        let n = self.clients.len();
        let mut usage: Vec<UsageVector> = (0..self.libraries.len())
            .map(|_| UsageVector::zeros(n))
            .collect();
        for (ci, row) in self.rows.iter().enumerate() {
            for &li in row {
                usage[li].insert(ci);
            }
        }
        DependencyMatrix {
            clients: self.clients,
            libraries: self.libraries,
            usage,
            client_index: self.client_index,
            library_index: self.library_index,
        }
    }
}

impl DependencyMatrix {
    /// Builds a matrix from `(client, libraries)` rows; library columns appear
    /// in order of first use.
    pub fn from_client_lists<I, L>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ClientId, L)>,
        L: IntoIterator<Item = LibraryId>,
    {
        let mut b = MatrixBuilder::new();
        for (client, libs) in rows {
            b.add_client(client, libs)?;
        }
        Ok(b.build())
    }

    /// Convenience constructor from string ids, mostly for fixtures.
    pub fn from_str_lists<'a, I, L>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, L)>,
        L: IntoIterator<Item = &'a str>,
    {
        let mut b = MatrixBuilder::new();
        for (client, libs) in rows {
            let libs = libs
                .into_iter()
                .map(LibraryId::new)
                .collect::<Result<Vec<_>>>()?;
            b.add_client(ClientId::new(client)?, libs)?;
        }
        Ok(b.build())
    }

    pub fn clients(&self) -> &[ClientId] {
        &self.clients
    }

    pub fn libraries(&self) -> &[LibraryId] {
        &self.libraries
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn library_count(&self) -> usize {
        self.libraries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty() || self.libraries.is_empty()
    }

    /// Usage vector of the library at column `lib`.
    pub fn usage(&self, lib: usize) -> &UsageVector {
        &self.usage[lib]
    }

    pub fn usage_vectors(&self) -> &[UsageVector] {
        &self.usage
    }

    pub fn usage_of(&self, lib: &LibraryId) -> Option<&UsageVector> {
        self.library_index(lib).map(|i| &self.usage[i])
    }

    pub fn library_index(&self, lib: &LibraryId) -> Option<usize> {
        self.library_index.get(lib).copied()
    }

    pub fn client_index(&self, client: &ClientId) -> Option<usize> {
        self.client_index.get(client).copied()
    }

    /// Resolves library ids to column indices, failing on the first unknown.
    pub fn library_indices<'a, I>(&self, libs: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a LibraryId>,
    {
        libs.into_iter()
            .map(|l| {
                self.library_index(l)
                    .ok_or_else(|| Error::UnknownLibrary(l.0.clone()))
            })
            .collect()
    }

    /// Library columns used by each client, ascending.
    pub fn client_rows(&self) -> Vec<Vec<usize>> {
        let mut rows = alloc::vec![Vec::new(); self.clients.len()];
        for (li, v) in self.usage.iter().enumerate() {
            for ci in v.iter_ones() {
                rows[ci].push(li);
            }
        }
        rows
    }

    pub fn libs_per_client(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.clients.len()];
        for v in &self.usage {
            for ci in v.iter_ones() {
                counts[ci] += 1;
            }
        }
        counts
    }

    /// Keeps only the given client rows (ascending positions), all libraries.
    pub fn restrict_clients(&self, keep: &[usize]) -> DependencyMatrix {
        let clients: Vec<ClientId> = keep.iter().map(|&i| self.clients[i].clone()).collect();
        let usage = self.usage.iter().map(|v| v.select(keep)).collect();
        DependencyMatrix {
            client_index: index_of(&clients),
            clients,
            libraries: self.libraries.clone(),
            library_index: self.library_index.clone(),
            usage,
        }
    }

    /// Keeps only the given library columns (ascending positions), all clients.
    pub fn restrict_libraries(&self, keep: &[usize]) -> DependencyMatrix {
        let libraries: Vec<LibraryId> = keep.iter().map(|&i| self.libraries[i].clone()).collect();
        DependencyMatrix {
            library_index: index_of(&libraries),
            libraries,
            usage: keep.iter().map(|&i| self.usage[i].clone()).collect(),
            clients: self.clients.clone(),
            client_index: self.client_index.clone(),
        }
    }

    /// Drops libraries no client uses.
    pub fn drop_unused_libraries(&self) -> DependencyMatrix {
        let keep: Vec<usize> = (0..self.libraries.len())
            .filter(|&i| !self.usage[i].is_empty())
            .collect();
        self.restrict_libraries(&keep)
    }

    /// Repeatedly removes libraries with fewer than `min_clients_per_lib`
    /// clients and clients with fewer than `min_libs_per_client` libraries
    /// until neither rule removes anything.
    pub fn filter(&self, min_clients_per_lib: usize, min_libs_per_client: usize) -> Result<Self> {
        let mut m = self.clone();
        loop {
            let keep_libs: Vec<usize> = (0..m.library_count())
                .filter(|&i| m.usage[i].cardinality() >= min_clients_per_lib)
                .collect();
            let lib_changed = keep_libs.len() != m.library_count();
            if lib_changed {
                m = m.restrict_libraries(&keep_libs);
            }
            let counts = m.libs_per_client();
            let keep_clients: Vec<usize> = (0..m.client_count())
                .filter(|&i| counts[i] >= min_libs_per_client)
                .collect();
            let client_changed = keep_clients.len() != m.client_count();
            if client_changed {
                m = m.restrict_clients(&keep_clients);
            }
            if !lib_changed && !client_changed {
                break;
            }
        }
        if m.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(m)
    }

    pub fn stats(&self) -> CorpusStats {
        let mut counts = self.libs_per_client();
        counts.sort_unstable();
        let n = counts.len();
        let (avg, median) = if n == 0 {
            (0.0, 0.0)
        } else {
            let total: usize = counts.iter().sum();
            let median = if n % 2 == 1 {
                counts[n / 2] as f64
            } else {
                (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
            };
            (total as f64 / n as f64, median)
        };
        CorpusStats {
            client_count: n,
            library_count: self.libraries.len(),
            avg_libs_per_client: avg,
            median_libs_per_client: median,
        }
    }
}

fn index_of<T: Ord + Clone>(items: &[T]) -> BTreeMap<T, usize> {
    items
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect()
}
