// WAV PCM16 mono encoding, little-endian, canonical 44-byte header.
// The server only accepts this shape, so capture is converted before upload.

export function encodeWavPcm16Mono(samples: Int16Array, sampleRate = 16000): Uint8Array {
	let dataBytes = samples.length * 2;
	let buf = new ArrayBuffer(44 + dataBytes);
	let view = new DataView(buf);
	let writeTag = (offset: number, tag: string) => {
		for (let i = 0; i < tag.length; i++) view.setUint8(offset + i, tag.charCodeAt(i));
	};
	writeTag(0, "RIFF");
	view.setUint32(4, 36 + dataBytes, true);
	writeTag(8, "WAVE");
	writeTag(12, "fmt ");
	view.setUint32(16, 16, true);          // fmt chunk size
	view.setUint16(20, 1, true);           // PCM
	view.setUint16(22, 1, true);           // mono
	view.setUint32(24, sampleRate, true);
	view.setUint32(28, sampleRate * 2, true);  // byte rate
	view.setUint16(32, 2, true);           // block align
	view.setUint16(34, 16, true);          // bits per sample
	writeTag(36, "data");
	view.setUint32(40, dataBytes, true);
	for (let i = 0; i < samples.length; i++) {
		view.setInt16(44 + i * 2, samples[i], true);
	}
	return new Uint8Array(buf);
}

export function floatTo16(samples: Float32Array): Int16Array {
	let out = new Int16Array(samples.length);
	for (let i = 0; i < samples.length; i++) {
		let s = Math.max(-1, Math.min(1, samples[i]));
		out[i] = Math.round(s * 32767);
	}
	return out;
}

export interface WavInfo {
	sampleRate: number;
	channels: number;
	bitsPerSample: number;
	dataByteLength: number;
	durationMs: number;
}

export function parseWavHeader(bytes: Uint8Array): WavInfo {
	let view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
	let tag = (offset: number) =>
		String.fromCharCode(...bytes.subarray(offset, offset + 4));
	if (tag(0) !== "RIFF" || tag(8) !== "WAVE") {
		throw new Error("not a RIFF/WAVE file");
	}
	// walk chunks; fmt and data are all we care about
	let offset = 12;
	let sampleRate = 0, channels = 0, bits = 0, dataLen = -1;
	while (offset + 8 <= bytes.byteLength) {
		let id = tag(offset);
		let size = view.getUint32(offset + 4, true);
		if (id === "fmt ") {
			channels = view.getUint16(offset + 10, true);
			sampleRate = view.getUint32(offset + 12, true);
			bits = view.getUint16(offset + 22, true);
		} else if (id === "data") {
			dataLen = size;
		}
		offset += 8 + size + (size % 2);
	}
	if (!sampleRate || dataLen < 0) throw new Error("missing fmt or data chunk");
	let frames = dataLen / (channels * bits / 8);
	return {
		sampleRate, channels, bitsPerSample: bits, dataByteLength: dataLen,
		durationMs: Math.round(frames * 1000 / sampleRate),
	};
}

// deterministic test tone for environments without a microphone
export function sineWav(durationMs = 2000, sampleRate = 16000,
	freq = 440, amplitude = 8000): Uint8Array {
	let n = Math.round(durationMs * sampleRate / 1000);
	let samples = new Int16Array(n);
	for (let i = 0; i < n; i++) {
		samples[i] = Math.round(amplitude * Math.sin(2 * Math.PI * freq * i / sampleRate));
	}
	return encodeWavPcm16Mono(samples, sampleRate);
}
