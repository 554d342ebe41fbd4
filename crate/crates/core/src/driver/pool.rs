use std::collections::VecDeque;
use std::ops::{Deref, DerefMut};
use std::sync::{Condvar, Mutex, MutexGuard};

use serde::Serialize;

use super::Session;

/// Snapshot of the pool's counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoolStats {
    pub size: usize,
    pub idle: usize,
    /// Callers blocked in `acquire` that have not been handed a session yet.
    pub waiting: usize,
    pub acquires: u64,
    /// Acquires that had to block.
    pub waits: u64,
}

struct State {
    idle: Vec<Box<dyn Session>>,
    /// Sessions released while callers were blocked, reserved for them.
    handoff: VecDeque<Box<dyn Session>>,
    blocked: usize,
    acquires: u64,
    waits: u64,
}

/// Fixed-size session pool. A released session goes straight to a blocked
/// caller when there is one, so a session is never idle while a caller waits.
pub struct Pool {
    size: usize,
    state: Mutex<State>,
    ready: Condvar,
}

impl Pool {
    pub fn new(sessions: Vec<Box<dyn Session>>) -> Pool {
        Pool {
            size: sessions.len(),
            state: Mutex::new(State {
                idle: sessions,
                handoff: VecDeque::new(),
                blocked: 0,
                acquires: 0,
                waits: 0,
            }),
            ready: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn acquire(&self) -> PooledSession<'_> {
        let mut st = self.lock();
        st.acquires += 1;
        if st.blocked == 0 {
            if let Some(s) = st.idle.pop() {
                return PooledSession { pool: self, session: Some(s) };
            }
        }
        st.waits += 1;
        st.blocked += 1;
        loop {
            if let Some(s) = st.handoff.pop_front() {
                st.blocked -= 1;
                return PooledSession { pool: self, session: Some(s) };
            }
            st = self.ready.wait(st).unwrap_or_else(|p| p.into_inner());
        }
    }

    fn release(&self, session: Box<dyn Session>) {
        let mut st = self.lock();
        if st.blocked > st.handoff.len() {
            st.handoff.push_back(session);
            drop(st);
            self.ready.notify_one();
        } else {
            st.idle.push(session);
        }
    }

    pub fn stats(&self) -> PoolStats {
        let st = self.lock();
        PoolStats {
            size: self.size,
            idle: st.idle.len(),
            waiting: st.blocked - st.handoff.len(),
            acquires: st.acquires,
            waits: st.waits,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// A session on loan from the pool; returned on drop.
pub struct PooledSession<'a> {
    pool: &'a Pool,
    session: Option<Box<dyn Session>>,
}

impl Deref for PooledSession<'_> {
    type Target = dyn Session;

    fn deref(&self) -> &Self::Target {
        self.session.as_deref().expect("session present until drop")
    }
}

impl DerefMut for PooledSession<'_> {
    fn deref_mut(&mut self) -> &mut Self::Target {
        self.session.as_deref_mut().expect("session present until drop")
    }
}

impl Drop for PooledSession<'_> {
    fn drop(&mut self) {
        if let Some(s) = self.session.take() {
            self.pool.release(s);
        }
    }
}
