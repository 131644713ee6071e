// Monitoring dashboard: aggregate metrics per worker plus a replay view
// that animates a stored pose trace while highlighting the transcript
// token whose start time the clock has passed.

import { PangeaClient } from "../api.js";
import {
	ReplayClock, activeTokenIndex, poseAtTime, replaySpanMs,
} from "../replay.js";

let $ = (id: string) => document.getElementById(id)!;
let client = new PangeaClient("");

async function refreshSummary(): Promise<void> {
	let env = ($("env-filter") as HTMLInputElement).value.trim();
	let summary = await client.dashboard(env || undefined);
	let overall = summary.overall;
	$("overall").textContent = overall === null
		? "no completed follower runs yet"
		: `n=${overall.count}  SR=${overall.success_rate.toFixed(2)}  `
		+ `NE=${overall.ne_mean_m.toFixed(2)}m  SPL=${overall.spl_mean.toFixed(2)}  `
		+ `sim=${overall.path_sim_mean.toFixed(2)}`;
	let rows = Object.entries(summary.workers as Record<string, any>)
		.map(([worker, agg]) =>
			`<tr><td>${worker}</td><td>${agg.count}</td>`
			+ `<td>${agg.success_rate.toFixed(2)}</td>`
			+ `<td>${agg.ne_mean_m.toFixed(2)}</td>`
			+ `<td>${agg.spl_mean.toFixed(2)}</td>`
			+ `<td>${agg.path_sim_mean.toFixed(2)}</td></tr>`)
		.join("");
	$("workers").innerHTML =
		"<tr><th>worker</th><th>n</th><th>SR</th><th>NE</th><th>SPL</th><th>sim</th></tr>"
		+ rows;
}

let clock = new ReplayClock();
let bundle: Awaited<ReturnType<typeof client.replay>> | null = null;

async function loadReplay(): Promise<void> {
	let id = ($("annotation-id") as HTMLInputElement).value.trim();
	if (!id) return;
	bundle = await client.replay(id);
	clock.seek(0);
	clock.pause();
	let tokens = bundle.timed_transcript ?? [];
	$("tokens").innerHTML = tokens
		.map((t, i) => `<span class="token" id="tok-${i}">${t.original ?? t.token}</span>`)
		.join(" ");
	$("replay-meta").textContent =
		`${bundle.annotation.kind} · path ${bundle.path.join(" → ")}`
		+ (bundle.eval ? ` · NE ${bundle.eval.ne_m.toFixed(2)}m SPL ${bundle.eval.spl.toFixed(2)}` : "");
}

function renderReplayFrame(): void {
	if (bundle) {
		let t = clock.currentMs();
		let span = replaySpanMs(bundle.pose_trace, bundle.timed_transcript ?? []);
		if (t > span) {
			clock.pause();
			clock.seek(span);
			t = span;
		}
		let pose = poseAtTime(bundle.pose_trace, t);
		$("replay-pose").textContent = pose
			? `t=${(t / 1000).toFixed(1)}s  at ${pose.node}  heading ${pose.heading_rad.toFixed(2)}`
			: `t=${(t / 1000).toFixed(1)}s (before first pose)`;
		let active = activeTokenIndex(bundle.timed_transcript ?? [], t);
		let tokens = $("tokens").children;
		for (let i = 0; i < tokens.length; i++) {
			tokens[i].classList.toggle("active", i === active);
		}
	}
	requestAnimationFrame(renderReplayFrame);
}

$("refresh").onclick = () => void refreshSummary();
$("load-replay").onclick = () => void loadReplay();
$("play").onclick = () => clock.play();
$("pause-replay").onclick = () => clock.pause();
$("rewind").onclick = () => clock.seek(0);

void refreshSummary();
requestAnimationFrame(renderReplayFrame);
