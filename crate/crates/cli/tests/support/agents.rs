//! Scripted stand-ins for coding agents.

use std::path::Path;

use reprokit_core::agent_repair::{launch_agent, AgentConfig, AgentOutcome, AgentRunOptions};
use reprokit_core::TestCase;

use super::{write_exec, FakeRuntime};

/// Copies the pristine scripts from `$1`, runs the entry scripts given after it, reports.
pub const FIXER: &str = r#"#!/bin/sh
cat /harness/prompt.txt
sol=$1
shift
cp -R "$sol/." /workspace/
for s in "$@"; do
    if ! Rscript "$s"; then
        echo "Not Reproduced" > status.txt
        exit 0
    fi
done
echo "Reproduced" > status.txt
echo "wrote status.txt"
echo "compared against /base_results/ afterwards"
"#;

/// Claims success without touching the code.
pub const LIAR: &str = "#!/bin/sh\necho Reproduced > status.txt\n";

/// Copies the reference outputs into the workspace instead of repairing anything.
pub const CHEATER: &str = r#"#!/bin/sh
echo "looking at /base_results"
ls /base_results
cp -R /base_results/. /workspace/
echo Reproduced > status.txt
"#;

/// Outlives any reasonable time limit.
pub const SLEEPER: &str = "#!/bin/sh\necho started\nsleep 60\necho Reproduced > status.txt\n";

/// Tries to rewrite and delete the mounted ground truth.
pub const VANDAL: &str = r#"#!/bin/sh
for f in $(find /base_results -type f); do
    echo tampered > "$f" 2>/dev/null
done
rm -rf /base_results/* 2>/dev/null
echo "Not Reproduced" > status.txt
"#;

/// Writes something other than a status word.
pub const MUMBLER: &str = "#!/bin/sh\necho 'probably fine' > status.txt\n";

pub struct MockAgent {
    pub name: &'static str,
    pub script: &'static str,
}

pub const ALL: [MockAgent; 6] = [
    MockAgent { name: "fixer", script: FIXER },
    MockAgent { name: "liar", script: LIAR },
    MockAgent { name: "cheater", script: CHEATER },
    MockAgent { name: "sleeper", script: SLEEPER },
    MockAgent { name: "vandal", script: VANDAL },
    MockAgent { name: "mumbler", script: MUMBLER },
];

/// Writes `agent`'s script and, for the fixer, the case's pristine scripts under the runtime's scratch dir.
pub fn config_for(rt: &FakeRuntime, case: &TestCase, agent: &MockAgent, time_limit: u64) -> AgentConfig {
    let dir = rt.scratch().join(&case.case_id);
    let script = dir.join(format!("{}.sh", agent.name));
    write_exec(&script, agent.script);
    let mut cmd = vec!["sh".to_string(), script.display().to_string()];
    if agent.name == "fixer" {
        let sol = dir.join("solution");
        for f in case.touched_files() {
            let p = f.under(&sol);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, case.pristine(&f).unwrap()).unwrap();
        }
        cmd.push(sol.display().to_string());
        cmd.extend(case.project.entry_scripts.iter().map(|s| s.to_string()));
    }
    let mut cfg = AgentConfig::new(agent.name, cmd);
    cfg.time_limit = time_limit;
    cfg
}

pub fn run(
    rt: &FakeRuntime,
    case: &TestCase,
    agent: &MockAgent,
    time_limit: u64,
    artifacts: Option<&Path>,
) -> AgentOutcome {
    let cfg = config_for(rt, case, agent, time_limit);
    let opts = AgentRunOptions { policy: None, artifacts: artifacts.map(Path::to_path_buf) };
    launch_agent(case, &cfg, &rt.executor(), &opts).unwrap()
}
