// Follower screen: listen to (or read) the instruction, walk the graph,
// then report done or give up. Pose events carry the audio playhead so the
// trace records what the follower was hearing at each step.

import { PangeaClient, ApiError, Instruction } from "../api.js";
import { PoseLogger } from "../poselog.js";
import { followerCanComplete, confirmOutcome } from "../session.js";
import { Envelope, playheadFraction, resampleBins, seekToMs } from "../waveform.js";
import {
	NavGraph, ViewerState, clickNeighbor, dragLook, parseGraph,
	projectMarkers, rayToEquirect, viewRay,
} from "../viewer.js";

const RENDER_W = 480;
const RENDER_H = 270;

let $ = (id: string) => document.getElementById(id)!;

async function main(): Promise<void> {
	let client = new PangeaClient("");
	let config = await client.config();
	let workerId = new URLSearchParams(location.search).get("worker")
		?? `follower-${Math.random().toString(36).slice(2, 8)}`;

	let session;
	try {
		session = await client.createSession(workerId, "follower");
	} catch (e) {
		banner(e instanceof ApiError && e.status === 409
			? "No follower tasks available right now." : String(e));
		return;
	}
	let sessionId = session.session_id;
	let env = session.task.environment_id;
	let serverState = session.state;

	let graph: NavGraph = parseGraph(await client.graphDocument(env));
	let viewer: ViewerState = {
		node: session.task.payload.start_node, headingRad: 0, pitchRad: 0,
	};

	// instruction panel: either text, or audio with a clickable waveform
	let audio = $("instruction-audio") as HTMLAudioElement;
	let hasAudio = false;
	let envelope: Envelope | null = null;
	let instruction: Instruction = await client.instruction(sessionId);
	if (instruction.kind === "text") {
		$("instruction-text").textContent = instruction.text ?? "";
	} else {
		hasAudio = true;
		audio.src = URL.createObjectURL(
			new Blob([instruction.audio!], { type: "audio/wav" }));
		audio.classList.remove("hidden");
		envelope = await client.waveform(sessionId);
		drawWaveform();
	}

	function audioTMs(): number | null {
		return hasAudio ? Math.round(audio.currentTime * 1000) : null;
	}

	let waveCanvas = $("wave") as HTMLCanvasElement;
	function drawWaveform(): void {
		if (!envelope) return;
		let ctx = waveCanvas.getContext("2d")!;
		let w = waveCanvas.width, h = waveCanvas.height;
		ctx.clearRect(0, 0, w, h);
		let bars = resampleBins(envelope, w);
		ctx.fillStyle = "#4a7";
		for (let x = 0; x < bars.length; x++) {
			let bh = Math.max(1, bars[x] * h);
			ctx.fillRect(x, (h - bh) / 2, 1, bh);
		}
		let playX = playheadFraction(envelope, audio.currentTime * 1000) * w;
		ctx.fillStyle = "#f55";
		ctx.fillRect(playX, 0, 2, h);
	}
	waveCanvas.onclick = e => {
		if (!envelope) return;
		let rect = waveCanvas.getBoundingClientRect();
		let target = seekToMs(envelope, (e.clientX - rect.left) / rect.width);
		audio.currentTime = target / 1000;
		drawWaveform();
		emitPose();  // the seek shows up in the trace right away
	};
	audio.ontimeupdate = drawWaveform;

	let epoch = performance.now();
	let logger = new PoseLogger(
		(seq, events) => client.postEvents(sessionId, seq, events),
		config.heartbeat_ms);

	function emitPose(): void {
		logger.update({
			node: viewer.node, headingRad: viewer.headingRad,
			pitchRad: viewer.pitchRad, audioTMs: audioTMs(),
		}, performance.now() - epoch);
	}

	let canvas = $("view") as HTMLCanvasElement;
	canvas.width = RENDER_W;
	canvas.height = RENDER_H;
	let ctx2d = canvas.getContext("2d")!;
	let panoImages = new Map<string, ImageData>();
	let imageBroken = false;

	async function loadPano(node: string): Promise<ImageData | null> {
		if (panoImages.has(node)) return panoImages.get(node)!;
		try {
			let img = new Image();
			img.src = client.panoramaUrl(env, node);
			await img.decode();
			let off = document.createElement("canvas");
			off.width = img.naturalWidth;
			off.height = img.naturalHeight;
			let octx = off.getContext("2d")!;
			octx.drawImage(img, 0, 0);
			let data = octx.getImageData(0, 0, off.width, off.height);
			panoImages.set(node, data);
			return data;
		} catch {
			return null;
		}
	}

	async function render(): Promise<void> {
		let pano = await loadPano(viewer.node);
		if (!pano) {
			imageBroken = true;
			banner("Panorama failed to load; movement disabled.");
			renderMarkers();
			return;
		}
		imageBroken = false;
		let out = ctx2d.createImageData(RENDER_W, RENDER_H);
		let aspect = RENDER_W / RENDER_H;
		for (let y = 0; y < RENDER_H; y++) {
			for (let x = 0; x < RENDER_W; x++) {
				let ray = viewRay((x + 0.5) / RENDER_W, (y + 0.5) / RENDER_H,
					viewer.headingRad, viewer.pitchRad, Math.PI / 2, aspect);
				let { u, v } = rayToEquirect(ray);
				let sx = Math.min(pano.width - 1, Math.floor(u * pano.width));
				let sy = Math.min(pano.height - 1, Math.floor(v * pano.height));
				let si = (sy * pano.width + sx) * 4;
				let di = (y * RENDER_W + x) * 4;
				out.data[di] = pano.data[si];
				out.data[di + 1] = pano.data[si + 1];
				out.data[di + 2] = pano.data[si + 2];
				out.data[di + 3] = 255;
			}
		}
		ctx2d.putImageData(out, 0, 0);
		renderMarkers();
	}

	function renderMarkers(): void {
		let layer = $("markers");
		layer.innerHTML = "";
		if (imageBroken) return;
		for (let marker of projectMarkers(graph, viewer)) {
			if (!marker.visible) continue;
			let el = document.createElement("button");
			el.className = "marker";
			el.textContent = marker.node;
			el.style.left = `${marker.screenX * 100}%`;
			el.style.top = `${marker.screenY * 100}%`;
			el.onclick = () => {
				if (imageBroken) return;
				let moved = clickNeighbor(graph, viewer, marker.node);
				if (moved === viewer) return;
				viewer = moved;
				emitPose();
				void render();
			};
			layer.appendChild(el);
		}
	}

	let dragging = false, lastX = 0, lastY = 0;
	canvas.addEventListener("pointerdown", e => {
		dragging = true;
		lastX = e.clientX;
		lastY = e.clientY;
	});
	window.addEventListener("pointerup", () => { dragging = false; });
	window.addEventListener("pointermove", e => {
		if (!dragging) return;
		let rect = canvas.getBoundingClientRect();
		viewer = dragLook(viewer,
			(e.clientX - lastX) / rect.width, (e.clientY - lastY) / rect.height);
		lastX = e.clientX;
		lastY = e.clientY;
		emitPose();
		void render();
	});

	setInterval(() => {
		if (serverState === "navigating") logger.tick(performance.now() - epoch);
	}, 50);
	setInterval(() => { void logger.flush(); }, 500);

	async function complete(outcome: "done" | "gave_up"): Promise<void> {
		if (!followerCanComplete(serverState)) return;
		if (!confirmOutcome(outcome, msg => window.confirm(msg))) return;
		await logger.drain();
		let out = await client.complete(sessionId, outcome);
		serverState = "completed";
		($("done") as HTMLButtonElement).disabled = true;
		($("gave-up") as HTMLButtonElement).disabled = true;
		banner(outcome === "done"
			? `Recorded. Annotation ${out.annotation_id}. Thank you!`
			: "Recorded as given up. Thank you for trying.");
	}
	$("done").onclick = () => void complete("done");
	$("gave-up").onclick = () => void complete("gave_up");

	emitPose();
	await render();
}

function banner(msg: string): void {
	let el = $("banner");
	el.textContent = msg;
	el.classList.remove("hidden");
}

main().catch(e => banner(String(e)));
