use std::collections::BTreeMap;

/// Named strategies behind a trait object, selected at runtime.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<&'static str, Box<T>>,
}

impl<T: ?Sized> Default for Registry<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: ?Sized> Registry<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the strategy stored under `name`.
    pub fn register(&mut self, name: &'static str, strategy: Box<T>) -> &mut Self {
        self.entries.insert(name, strategy);
        self
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        self.entries.get(name).map(Box::as_ref)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &T)> {
        self.entries.iter().map(|(k, v)| (*k, v.as_ref()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greet {
        fn hi(&self) -> String;
    }

    struct En;
    impl Greet for En {
        fn hi(&self) -> String {
            "hello".into()
        }
    }

    #[test]
    fn lookup_by_name() {
        let mut r: Registry<dyn Greet> = Registry::new();
        r.register("en", Box::new(En));
        assert_eq!(r.get("en").unwrap().hi(), "hello");
        assert!(r.get("fr").is_none());
        assert_eq!(r.names(), vec!["en"]);
    }
}
