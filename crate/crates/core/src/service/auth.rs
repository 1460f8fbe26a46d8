use std::collections::HashMap;

use argon2::password_hash::rand_core::OsRng;
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use chrono::NaiveDateTime;
use parking_lot::Mutex;
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Stored account. Only the persistence layer serializes this type; API
/// responses use [`UserView`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct User {
    pub id: String,
    pub name: String,
    pub credential_hash: String,
    pub role: String,
    pub created_at: NaiveDateTime,
}

pub const DEFAULT_ROLE: &str = "officer";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UserView {
    pub id: String,
    pub name: String,
    pub role: String,
}

impl From<&User> for UserView {
    fn from(u: &User) -> Self {
        UserView {
            id: u.id.clone(),
            name: u.name.clone(),
            role: u.role.clone(),
        }
    }
}

pub fn hash_secret(secret: &str) -> String {
    let salt = SaltString::generate(&mut OsRng);
    Argon2::default()
        .hash_password(secret.as_bytes(), &salt)
        .expect("argon2 hashing with default params")
        .to_string()
}

pub fn verify_secret(secret: &str, hash: &str) -> bool {
    match PasswordHash::new(hash) {
        Ok(parsed) => Argon2::default()
            .verify_password(secret.as_bytes(), &parsed)
            .is_ok(),
        Err(_) => false,
    }
}

/// Hash compared against when the user name is unknown, so both failure
/// paths cost the same.
pub(crate) fn dummy_hash() -> &'static str {
    static DUMMY: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    DUMMY.get_or_init(|| hash_secret("not a real secret"))
}

/// Opaque bearer tokens mapped to user ids. Sessions live in memory only.
#[derive(Default)]
pub struct Sessions {
    tokens: Mutex<HashMap<String, String>>,
}

impl Sessions {
    pub fn issue(&self, user_id: &str) -> String {
        let mut bytes = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut bytes);
        let token = hex::encode(bytes);
        self.tokens
            .lock()
            .insert(token.clone(), user_id.to_string());
        token
    }

    pub fn user_id(&self, token: &str) -> Option<String> {
        self.tokens.lock().get(token).cloned()
    }

    pub fn revoke(&self, token: &str) -> bool {
        self.tokens.lock().remove(token).is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Permission {
    ReadCases,
    WriteCases,
    ExecuteActions,
    ManageSources,
    Simulate,
}

/// Called before every protected operation. The default grants everything
/// to every authenticated user; a stricter hook can look at `User::role`.
pub trait PermissionHook: Send + Sync {
    fn permits(&self, user: &User, permission: Permission) -> bool;
}

pub struct AllowAll;

impl PermissionHook for AllowAll {
    fn permits(&self, _user: &User, _permission: Permission) -> bool {
        true
    }
}
