//! Child-process supervision shared by both backends: tagged log capture,
//! tail-biased truncation and timeout enforcement.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use super::ExitStatus;

/// Default log cap: 1 MiB.
pub const DEFAULT_LOG_CAP: usize = 1 << 20;

/// Keeps the most recent lines of a log up to a byte budget.
#[derive(Debug)]
pub struct TailLog {
    cap: usize,
    bytes: usize,
    lines: VecDeque<String>,
    dropped: usize,
}

impl TailLog {
    pub fn new(cap: usize) -> Self {
        TailLog { cap, bytes: 0, lines: VecDeque::new(), dropped: 0 }
    }

    pub fn push(&mut self, line: String) {
        self.bytes += line.len();
        self.lines.push_back(line);
        while self.bytes > self.cap {
            match self.lines.pop_front() {
                Some(old) => {
                    self.bytes -= old.len();
                    self.dropped += old.len();
                }
                None => break,
            }
        }
    }

    pub fn finish(self) -> String {
        let mut out = String::with_capacity(self.bytes + 64);
        if self.dropped > 0 {
            out.push_str(&format!("[harness] log truncated: {} earlier bytes omitted\n", self.dropped));
        }
        for l in self.lines {
            out.push_str(&l);
        }
        out
    }
}

/// Tail-biased truncation of an existing text to at most `cap` bytes, cut at a line start.
pub fn truncate_tail(text: &str, cap: usize) -> String {
    if text.len() <= cap {
        return text.to_string();
    }
    let mut start = text.len() - cap;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    if let Some(nl) = text[start..].find('\n') {
        if start + nl + 1 < text.len() {
            start += nl + 1;
        }
    }
    format!("[harness] log truncated: {start} earlier bytes omitted\n{}", &text[start..])
}

fn pump<R: Read + Send + 'static>(src: R, tag: &'static str, tx: mpsc::Sender<String>) -> thread::JoinHandle<()> {
    thread::spawn(move || {
        let mut reader = BufReader::new(src);
        let mut buf = Vec::new();
        loop {
            buf.clear();
            match reader.read_until(b'\n', &mut buf) {
                Ok(0) | Err(_) => break,
                Ok(_) => {
                    let mut line = String::from_utf8_lossy(&buf).into_owned();
                    if !line.ends_with('\n') {
                        line.push('\n');
                    }
                    if tx.send(format!("[{tag}] {line}")).is_err() {
                        break;
                    }
                }
            }
        }
    })
}

pub struct Supervised {
    pub status: ExitStatus,
    pub log: String,
    pub wall_time: f64,
}

/// Spawns `cmd` in its own process group, captures both streams and kills the
/// whole group once `timeout` elapses.
pub fn run_supervised(mut cmd: Command, timeout: Duration, log_cap: usize, on_timeout: impl FnOnce()) -> Supervised {
    cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let start = Instant::now();
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => {
            let program = cmd.get_program().to_string_lossy().into_owned();
            return Supervised {
                status: ExitStatus::LaunchFailure,
                log: format!("[harness] failed to launch {program}: {e}\n"),
                wall_time: start.elapsed().as_secs_f64(),
            };
        }
    };
    let (tx, rx) = mpsc::channel();
    let readers = [
        pump(child.stdout.take().expect("piped stdout"), "stdout", tx.clone()),
        pump(child.stderr.take().expect("piped stderr"), "stderr", tx),
    ];
    let mut log = TailLog::new(log_cap);
    let deadline = start + timeout;
    let mut timed_out = false;
    let mut poll = Duration::from_millis(1);
    let status = loop {
        while let Ok(line) = rx.try_recv() {
            log.push(line);
        }
        match child.try_wait() {
            Ok(Some(s)) => break Some(s),
            Ok(None) => {}
            Err(_) => break None,
        }
        if Instant::now() >= deadline {
            timed_out = true;
            kill_group(&mut child);
            break child.wait().ok();
        }
        thread::sleep(poll);
        poll = (poll * 2).min(Duration::from_millis(20));
    };
    if timed_out {
        on_timeout();
    } else {
        // Grandchildren may still hold the pipes open.
        kill_group(&mut child);
    }
    for r in readers {
        let _ = r.join();
    }
    for line in rx.try_iter() {
        log.push(line);
    }
    let wall_time = start.elapsed().as_secs_f64();
    let status = if timed_out {
        log.push(format!("[harness] killed after {:.1} s timeout\n", timeout.as_secs_f64()));
        ExitStatus::Timeout
    } else {
        match status.and_then(|s| s.code()) {
            Some(0) => ExitStatus::Success,
            Some(code) => ExitStatus::NonZeroExit(code),
            None => ExitStatus::NonZeroExit(-1),
        }
    };
    Supervised { status, log: log.finish(), wall_time }
}

fn kill_group(child: &mut Child) {
    #[cfg(unix)]
    {
        let pid = child.id() as i32;
        // SAFETY: signalling a process group we created; no memory is shared.
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}
