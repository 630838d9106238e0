use crate::error::{Error, Result};
use crate::geom::{is_rotation, Mat3, Rigid, Vec3};

/// Name prefix that marks a joint as part of the finger group.
pub const FINGER_PREFIX: &str = "finger_";

/// Tolerance on bind rotation orthonormality and determinant.
pub const ROTATION_TOL: f64 = 1e-8;

/// Joint hierarchy with bind-pose world transforms.
///
/// Joints are stored in topological order: `parent(k) < k`, and joint 0 is
/// the single root.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    bind: Vec<Rigid>,
    children: Vec<Vec<usize>>,
}

impl Skeleton {
    pub fn new(names: Vec<String>, parents: Vec<Option<usize>>, bind: Vec<Rigid>) -> Result<Self> {
        let j = names.len();
        if parents.len() != j || bind.len() != j {
            return Err(Error::ValidationFailure(format!(
                "skeleton arrays disagree: {j} names, {} parents, {} bind transforms",
                parents.len(),
                bind.len()
            )));
        }
        if j == 0 {
            return Err(Error::ValidationFailure("skeleton has no joints".into()));
        }
        check_hierarchy(&parents)?;
        for (k, t) in bind.iter().enumerate() {
            if !is_rotation(&t.rotation, ROTATION_TOL) {
                return Err(Error::ValidationFailure(format!(
                    "bind rotation of joint {k} is not a proper rotation"
                )));
            }
            if !t.translation.iter().all(|c| c.is_finite()) {
                return Err(Error::ValidationFailure(format!("non-finite bind translation at joint {k}")));
            }
        }
        let mut children = vec![Vec::new(); j];
        for (k, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(k);
            }
        }
        Ok(Self {
            names,
            parents,
            bind,
            children,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn parent(&self, k: usize) -> Option<usize> {
        self.parents[k]
    }

    pub fn children(&self, k: usize) -> &[usize] {
        &self.children[k]
    }

    pub fn bind(&self) -> &[Rigid] {
        &self.bind
    }

    pub fn bind_rotation(&self, k: usize) -> &Mat3 {
        &self.bind[k].rotation
    }

    pub fn bind_position(&self, k: usize) -> &Vec3 {
        &self.bind[k].translation
    }

    pub fn bind_positions(&self) -> Vec<Vec3> {
        self.bind.iter().map(|t| t.translation).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_finger(&self, k: usize) -> bool {
        self.names[k].starts_with(FINGER_PREFIX)
    }

    /// `mask[j]` is true when `j` is `k` or one of its descendants.
    pub fn subtree_mask(&self, k: usize) -> Vec<bool> {
        let mut mask = vec![false; self.joint_count()];
        mask[k] = true;
        // topological order: one forward sweep suffices
        for j in k + 1..self.joint_count() {
            if let Some(p) = self.parents[j] {
                if mask[p] {
                    mask[j] = true;
                }
            }
        }
        mask
    }

    /// Hierarchy depth of every joint (root = 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.joint_count()];
        for k in 1..self.joint_count() {
            if let Some(p) = self.parents[k] {
                d[k] = d[p] + 1;
            }
        }
        d
    }
}

fn check_hierarchy(parents: &[Option<usize>]) -> Result<()> {
    let j = parents.len();
    for (k, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            if *p >= j {
                return Err(Error::ValidationFailure(format!("parent index of joint {k} out of range")));
            }
        }
    }
    for start in 0..j {
        let mut cur = start;
        let mut steps = 0;
        while let Some(p) = parents[cur] {
            cur = p;
            steps += 1;
            if steps > j {
                return Err(Error::ValidationFailure(format!("hierarchy cycle through joint {start}")));
            }
        }
    }
    let roots = parents.iter().filter(|p| p.is_none()).count();
    if roots != 1 || parents[0].is_some() {
        return Err(Error::ValidationFailure(format!(
            "hierarchy must have exactly one root at index 0 (found {roots} roots)"
        )));
    }
    for (k, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            if *p >= k {
                return Err(Error::ValidationFailure(format!(
                    "hierarchy not topologically sorted at joint {k}"
                )));
            }
        }
    }
    Ok(())
}
